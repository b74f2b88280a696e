"""Deterministic dataset manifests, shards, splits, and corpus statistics.

Manifests are line-oriented TSV with a comment header; rebuilding from
identical inputs, config, and seed produces byte-identical files. Splits
are a pure function of (record_id, seed) so growing the corpus never
reassigns existing records.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import BadRatios, UnresolvedReviewItems

PRETRAIN_RESIZE = 224
FINETUNE_RESIZE = 384
DEFAULT_SHARD_SIZE = 10_000

STAGES = ("pretrain", "finetune")


@dataclass(frozen=True)
class StageConfig:
    stage: str  # pretrain | finetune
    resize_target: int
    shard_size: int = DEFAULT_SHARD_SIZE

    @classmethod
    def pretrain(cls, shard_size: int = DEFAULT_SHARD_SIZE) -> "StageConfig":
        return cls(stage="pretrain", resize_target=PRETRAIN_RESIZE, shard_size=shard_size)

    @classmethod
    def finetune(cls, shard_size: int = DEFAULT_SHARD_SIZE) -> "StageConfig":
        return cls(stage="finetune", resize_target=FINETUNE_RESIZE, shard_size=shard_size)

    @classmethod
    def for_stage(cls, stage: str, shard_size: int = DEFAULT_SHARD_SIZE) -> "StageConfig":
        if stage == "pretrain":
            return cls.pretrain(shard_size)
        if stage == "finetune":
            return cls.finetune(shard_size)
        raise ValueError(f"unknown stage: {stage!r}")


@dataclass(frozen=True)
class ManifestEntry:
    record_id: str
    image_path: str
    text: str
    provenance: tuple[str, ...]
    taxon_id: str  # "" when the record has no category annotation
    source: str
    kind: str  # caption | instruction
    template_id: Optional[int] = None
    shard_index: int = 0

    def sort_key(self) -> tuple:
        return (self.record_id, self.template_id if self.template_id is not None else -1, self.text)


def escape_field(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def unescape_field(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            out.append({"\\": "\\", "t": "\t", "n": "\n"}.get(nxt, nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def entry_line(entry: ManifestEntry) -> str:
    return "\t".join(
        (
            entry.record_id,
            escape_field(entry.image_path),
            escape_field(entry.text),
            "|".join(entry.provenance),
            entry.taxon_id,
        )
    )


@dataclass(frozen=True)
class StatsReport:
    pair_count: int
    distinct_concepts: int
    per_source: dict[str, int]
    instruction_sample_count: int

    def to_lines(self) -> list[str]:
        lines = [
            f"pair_count={self.pair_count}",
            f"distinct_concepts={self.distinct_concepts}",
            f"instruction_sample_count={self.instruction_sample_count}",
        ]
        lines.extend(f"per_source.{src}={n}" for src, n in sorted(self.per_source.items()))
        return lines


def compute_stats(entries: Sequence[ManifestEntry]) -> StatsReport:
    taxa = {e.taxon_id for e in entries if e.taxon_id}
    sources = Counter(e.source for e in entries)
    return StatsReport(
        pair_count=len(entries),
        distinct_concepts=len(taxa),
        per_source=dict(sorted(sources.items())),
        instruction_sample_count=sum(1 for e in entries if e.kind == "instruction"),
    )


@dataclass
class DatasetManifest:
    stage: StageConfig
    entries: list[ManifestEntry]
    stats: StatsReport
    build_fingerprint: str
    seed: int

    def header_lines(self) -> list[str]:
        return [
            f"# stage={self.stage.stage}",
            f"# resize_target={self.stage.resize_target}",
            f"# shard_size={self.stage.shard_size}",
            f"# seed={self.seed}",
            *(f"# {line}" for line in self.stats.to_lines()),
            f"# build_fingerprint={self.build_fingerprint}",
        ]

    def to_text(self) -> str:
        lines = self.header_lines() + [entry_line(e) for e in self.entries]
        return "\n".join(lines) + "\n"


def _fingerprint(stage: StageConfig, seed: int, lines: Iterable[str]) -> str:
    digest = hashlib.sha256()
    digest.update(f"{stage.stage}:{stage.resize_target}:{stage.shard_size}:{seed}".encode())
    for line in lines:
        digest.update(line.encode("utf-8"))
        digest.update(b"\n")
    return digest.hexdigest()


@dataclass(frozen=True)
class ReviewResolution:
    """Final review outcome for a record: how assembly must treat it."""

    state: str  # pending | accepted | rejected | edited
    edited_text: Optional[str] = None


def build_manifest(
    config: StageConfig,
    entries: Sequence[ManifestEntry],
    review: dict[str, ReviewResolution],
    seed: int,
    *,
    exclude_pending: bool = False,
) -> DatasetManifest:
    """Apply review outcomes, order entries, and assign shard indices.

    Pending reviews block assembly unless `exclude_pending` drops them;
    rejected records are excluded; edited captions replace the caption text
    with a `human_refined` provenance tag.
    """
    pending = {
        e.record_id
        for e in entries
        if review.get(e.record_id, ReviewResolution("accepted")).state == "pending"
    }
    if pending and not exclude_pending:
        raise UnresolvedReviewItems(pending)

    kept: list[ManifestEntry] = []
    for entry in entries:
        resolution = review.get(entry.record_id)
        if entry.record_id in pending:
            continue
        if resolution is None or resolution.state == "accepted":
            kept.append(entry)
        elif resolution.state == "rejected":
            continue
        elif resolution.state == "edited":
            if entry.kind == "caption" and resolution.edited_text:
                kept.append(
                    replace(
                        entry,
                        text=resolution.edited_text,
                        provenance=entry.provenance + ("human_refined",),
                    )
                )
            else:
                kept.append(entry)

    ordered = sorted(kept, key=ManifestEntry.sort_key)
    sharded = [replace(e, shard_index=i // config.shard_size) for i, e in enumerate(ordered)]
    lines = [entry_line(e) for e in sharded]
    return DatasetManifest(
        stage=config,
        entries=sharded,
        stats=compute_stats(sharded),
        build_fingerprint=_fingerprint(config, seed, lines),
        seed=seed,
    )


def write_manifest(manifest: DatasetManifest, out_dir: Path) -> list[Path]:
    """Write the manifest plus `shard-{stage}-{index:06}.tsv` files."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    manifest_path = out_dir / f"manifest-{manifest.stage.stage}.tsv"
    manifest_path.write_text(manifest.to_text(), encoding="utf-8")
    written.append(manifest_path)

    by_shard: dict[int, list[ManifestEntry]] = {}
    for entry in manifest.entries:
        by_shard.setdefault(entry.shard_index, []).append(entry)
    for index in sorted(by_shard):
        shard_path = out_dir / f"shard-{manifest.stage.stage}-{index:06d}.tsv"
        shard_path.write_text(
            "".join(entry_line(e) + "\n" for e in by_shard[index]), encoding="utf-8"
        )
        written.append(shard_path)

    stats_path = out_dir / f"stats-{manifest.stage.stage}.txt"
    stats_path.write_text("\n".join(manifest.stats.to_lines()) + "\n", encoding="utf-8")
    written.append(stats_path)
    return written


# --- splits -------------------------------------------------------------------


def split_fraction(record_id: str, seed: int) -> float:
    digest = hashlib.sha256(f"{seed}:{record_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


def split_records(
    entries: Sequence[ManifestEntry], ratios: Sequence[float], seed: int
) -> tuple[list[ManifestEntry], list[ManifestEntry]]:
    """Partition entries into (train, val) by hashing record ids.

    Assignment depends only on (record_id, seed): all samples of a record
    land in the same split, and adding records never reshuffles existing
    assignments.
    """
    if len(ratios) != 2 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise BadRatios(f"ratios must be two non-negative numbers summing to 1: {ratios}")
    train, val = [], []
    for entry in entries:
        if split_fraction(entry.record_id, seed) < ratios[0]:
            train.append(entry)
        else:
            val.append(entry)
    return train, val
