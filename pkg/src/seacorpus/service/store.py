"""Durable corpus store: append-only event log plus periodic snapshots.

Every mutation appends one fsynced JSON line to ``log.jsonl``; recovery
loads ``snapshot.json`` (if present) and replays the log, so a crash never
loses an acknowledged write. Images are kept content-addressed under
``images/<record_id>.png``.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from PIL import Image

from ..caption import CaptionBundle, CaptionCandidate
from ..errors import AlreadyDecided, MissingEditedText, UnknownRecord, UnknownReviewItem
from ..ingest.records import MediaRecord, Source
from ..instruct import InstructionSample, ValidationResult

REVIEW_REASONS = ("low_similarity_margin", "subtitle_aligned", "sampled_audit")


@dataclass
class ReviewItem:
    item_id: str
    record_id: str
    proposed_text: str
    provenance: tuple[str, ...]
    reason: str
    state: str = "pending"  # pending | accepted | rejected | edited
    edited_text: Optional[str] = None
    reviewer: Optional[str] = None
    decided_at: Optional[float] = None


@dataclass(frozen=True)
class ReviewDecision:
    item_id: str
    verdict: str  # accept | reject | edit
    edited_text: Optional[str] = None
    reviewer: str = ""
    decided_at: float = field(default_factory=time.time)


@dataclass
class Job:
    job_id: str
    kind: str
    params: dict
    state: str = "queued"  # queued | running | done | failed
    done: int = 0
    total: int = 0
    error: Optional[str] = None


def review_item_id(record_id: str, reason: str, proposed_text: str) -> str:
    digest = hashlib.sha256(f"{record_id}:{reason}:{proposed_text}".encode("utf-8"))
    return digest.hexdigest()[:16]


def job_fingerprint(kind: str, params: dict) -> str:
    canonical = json.dumps({"kind": kind, "params": params}, sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


# --- serde ----------------------------------------------------------------


def _record_to_dict(record: MediaRecord) -> dict:
    data = asdict(record)
    data["source"] = record.source.value
    return data


def _record_from_dict(data: dict) -> MediaRecord:
    return MediaRecord(
        record_id=data["record_id"],
        source=Source(data["source"]),
        origin_uri=data["origin_uri"],
        category_annotation=data.get("category_annotation"),
        raw_text=data.get("raw_text"),
        created_at=data.get("created_at", 0.0),
    )


def _bundle_to_dict(bundle: CaptionBundle) -> dict:
    return {
        "record_id": bundle.record_id,
        "candidates": [asdict(c) for c in bundle.candidates],
        "final_text": bundle.final_text,
        "provenance": list(bundle.provenance),
    }


def _bundle_from_dict(data: dict) -> CaptionBundle:
    return CaptionBundle(
        record_id=data["record_id"],
        candidates=[CaptionCandidate(**c) for c in data["candidates"]],
        final_text=data.get("final_text"),
        provenance=list(data.get("provenance", [])),
    )


def _sample_to_dict(sample: InstructionSample) -> dict:
    data = asdict(sample)
    data["validation"] = {
        "passed": sample.validation.passed,
        "reasons": list(sample.validation.reasons),
    }
    return data


def _sample_from_dict(data: dict) -> InstructionSample:
    validation = data.get("validation", {})
    return InstructionSample(
        record_id=data["record_id"],
        instruction=data["instruction"],
        response=data["response"],
        generator=data["generator"],
        template_id=data["template_id"],
        validation=ValidationResult(
            passed=bool(validation.get("passed")),
            reasons=tuple(validation.get("reasons", [])),
        ),
    )


def _item_to_dict(item: ReviewItem) -> dict:
    data = asdict(item)
    data["provenance"] = list(item.provenance)
    return data


def _item_from_dict(data: dict) -> ReviewItem:
    return ReviewItem(
        item_id=data["item_id"],
        record_id=data["record_id"],
        proposed_text=data["proposed_text"],
        provenance=tuple(data.get("provenance", [])),
        reason=data["reason"],
        state=data.get("state", "pending"),
        edited_text=data.get("edited_text"),
        reviewer=data.get("reviewer"),
        decided_at=data.get("decided_at"),
    )


class CorpusStore:
    """Single-writer store with multi-reader in-memory state."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "images").mkdir(exist_ok=True)
        (self.root / "manifests").mkdir(exist_ok=True)
        self._lock = threading.RLock()
        self._log_path = self.root / "log.jsonl"
        self._snapshot_path = self.root / "snapshot.json"

        self.records: dict[str, MediaRecord] = {}
        self.image_meta: dict[str, dict] = {}  # record_id -> {path, width, height}
        self.bundles: dict[str, CaptionBundle] = {}
        self.samples: dict[str, InstructionSample] = {}  # keyed record:template:generator
        self.review_items: dict[str, ReviewItem] = {}
        self.idempotency: dict[str, str] = {}  # idempotency key -> item_id
        self.jobs: dict[str, Job] = {}
        self.dedup_dropped: set[str] = set()
        self.dedup_lines: list[str] = []

        self._recover()

    # --- persistence -----------------------------------------------------

    def _recover(self):
        if self._snapshot_path.exists():
            snapshot = json.loads(self._snapshot_path.read_text(encoding="utf-8"))
            for data in snapshot.get("events", []):
                self._apply(data)
        if self._log_path.exists():
            with open(self._log_path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        self._apply(json.loads(line))
                    except json.JSONDecodeError:
                        # A torn final line means the write never completed;
                        # the event was never acknowledged, so drop it.
                        continue

    def _append(self, event: dict):
        line = json.dumps(event, sort_keys=True, ensure_ascii=False)
        with open(self._log_path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _emit(self, event: dict):
        self._apply(event)
        self._append(event)

    def snapshot(self):
        """Fold current state into snapshot.json and truncate the log."""
        with self._lock:
            events = self._state_events()
            tmp = self._snapshot_path.with_suffix(".json.tmp")
            tmp.write_text(json.dumps({"events": events}, sort_keys=True), encoding="utf-8")
            os.replace(tmp, self._snapshot_path)
            with open(self._log_path, "w", encoding="utf-8") as fh:
                fh.flush()
                os.fsync(fh.fileno())

    def _state_events(self) -> list[dict]:
        events: list[dict] = []
        for record_id in sorted(self.records):
            events.append(
                {
                    "type": "record_added",
                    "record": _record_to_dict(self.records[record_id]),
                    "image": self.image_meta.get(record_id),
                }
            )
        for record_id in sorted(self.bundles):
            events.append({"type": "bundle_updated", "bundle": _bundle_to_dict(self.bundles[record_id])})
        for key in sorted(self.samples):
            events.append({"type": "sample_added", "sample": _sample_to_dict(self.samples[key])})
        for item_id in self.review_items:
            events.append({"type": "review_enqueued", "item": _item_to_dict(self.review_items[item_id])})
        for key in sorted(self.idempotency):
            events.append({"type": "idempotency", "key": key, "item_id": self.idempotency[key]})
        for job_id in sorted(self.jobs):
            events.append({"type": "job_upserted", "job": asdict(self.jobs[job_id])})
        if self.dedup_lines or self.dedup_dropped:
            events.append(
                {
                    "type": "dedup_updated",
                    "dropped": sorted(self.dedup_dropped),
                    "lines": self.dedup_lines,
                }
            )
        return events

    def _apply(self, event: dict):
        kind = event["type"]
        if kind == "record_added":
            record = _record_from_dict(event["record"])
            self.records[record.record_id] = record
            if event.get("image"):
                self.image_meta[record.record_id] = event["image"]
        elif kind == "bundle_updated":
            bundle = _bundle_from_dict(event["bundle"])
            self.bundles[bundle.record_id] = bundle
        elif kind == "sample_added":
            sample = _sample_from_dict(event["sample"])
            key = f"{sample.record_id}:{sample.template_id}:{sample.generator}"
            self.samples[key] = sample
        elif kind == "review_enqueued":
            item = _item_from_dict(event["item"])
            existing = self.review_items.get(item.item_id)
            if existing is None:
                self.review_items[item.item_id] = item
        elif kind == "decision_applied":
            item = _item_from_dict(event["item"])
            self.review_items[item.item_id] = item
            key = event.get("idempotency_key")
            if key:
                self.idempotency[key] = item.item_id
        elif kind == "idempotency":
            self.idempotency[event["key"]] = event["item_id"]
        elif kind == "job_upserted":
            job = Job(**event["job"])
            self.jobs[job.job_id] = job
        elif kind == "dedup_updated":
            self.dedup_dropped = set(event.get("dropped", []))
            self.dedup_lines = list(event.get("lines", []))
        else:
            raise ValueError(f"unknown event type: {kind!r}")

    # --- records ----------------------------------------------------------

    def add_record(self, record: MediaRecord, image: Optional[Image.Image] = None) -> MediaRecord:
        """Idempotent by record_id: re-adding an existing record is a no-op."""
        with self._lock:
            existing = self.records.get(record.record_id)
            if existing is not None:
                return existing
            image_meta = None
            if image is not None:
                rel = f"images/{record.record_id}.png"
                path = self.root / rel
                if not path.exists():
                    image.convert("RGB").save(path, format="PNG")
                image_meta = {"path": rel, "width": image.width, "height": image.height}
            self._emit(
                {"type": "record_added", "record": _record_to_dict(record), "image": image_meta}
            )
            return record

    def image_size(self, record_id: str) -> Optional[tuple[int, int]]:
        meta = self.image_meta.get(record_id)
        if not meta:
            return None
        return meta["width"], meta["height"]

    def image_path(self, record_id: str) -> Optional[Path]:
        meta = self.image_meta.get(record_id)
        return self.root / meta["path"] if meta else None

    # --- bundles / samples --------------------------------------------------

    def upsert_bundle(self, bundle: CaptionBundle):
        with self._lock:
            self._emit({"type": "bundle_updated", "bundle": _bundle_to_dict(bundle)})

    def bundle(self, record_id: str) -> Optional[CaptionBundle]:
        return self.bundles.get(record_id)

    def add_sample(self, sample: InstructionSample):
        with self._lock:
            self._emit({"type": "sample_added", "sample": _sample_to_dict(sample)})

    # --- review -------------------------------------------------------------

    def enqueue_review(self, record_id: str, proposed_text: str, reason: str) -> ReviewItem:
        """Create (or return) the pending review item for this proposal."""
        if reason not in REVIEW_REASONS:
            raise ValueError(f"unknown review reason: {reason!r}")
        with self._lock:
            if record_id not in self.records:
                raise UnknownRecord(record_id)
            item_id = review_item_id(record_id, reason, proposed_text)
            existing = self.review_items.get(item_id)
            if existing is not None:
                return existing
            bundle = self.bundles.get(record_id)
            item = ReviewItem(
                item_id=item_id,
                record_id=record_id,
                proposed_text=proposed_text,
                provenance=tuple(bundle.provenance) if bundle else (),
                reason=reason,
            )
            self._emit({"type": "review_enqueued", "item": _item_to_dict(item)})
            return item

    def next_pending_review(self) -> Optional[ReviewItem]:
        with self._lock:
            for item in self.review_items.values():
                if item.state == "pending":
                    return item
            return None

    def pending_review_count(self) -> int:
        return sum(1 for item in self.review_items.values() if item.state == "pending")

    def review_counts(self) -> dict[str, int]:
        counts = {"pending": 0, "accepted": 0, "rejected": 0, "edited": 0}
        for item in self.review_items.values():
            counts[item.state] = counts.get(item.state, 0) + 1
        return counts

    def apply_decision(
        self, decision: ReviewDecision, idempotency_key: Optional[str] = None
    ) -> ReviewItem:
        """Apply one decision; replays with the same idempotency key return
        the original result, and a second distinct decision is rejected."""
        with self._lock:
            if idempotency_key and idempotency_key in self.idempotency:
                return self.review_items[self.idempotency[idempotency_key]]
            item = self.review_items.get(decision.item_id)
            if item is None:
                raise UnknownReviewItem(decision.item_id)
            if item.state != "pending":
                raise AlreadyDecided(item.item_id)
            if decision.verdict == "edit" and not (decision.edited_text or "").strip():
                raise MissingEditedText(item.item_id)
            if decision.verdict not in ("accept", "reject", "edit"):
                raise ValueError(f"unknown verdict: {decision.verdict!r}")

            state = {"accept": "accepted", "reject": "rejected", "edit": "edited"}[decision.verdict]
            updated = ReviewItem(
                item_id=item.item_id,
                record_id=item.record_id,
                proposed_text=item.proposed_text,
                provenance=item.provenance,
                reason=item.reason,
                state=state,
                edited_text=decision.edited_text if decision.verdict == "edit" else None,
                reviewer=decision.reviewer,
                decided_at=decision.decided_at,
            )
            self._emit(
                {
                    "type": "decision_applied",
                    "item": _item_to_dict(updated),
                    "idempotency_key": idempotency_key,
                }
            )
            # Reflect the outcome on the caption bundle.
            bundle = self.bundles.get(item.record_id)
            if bundle is not None:
                if state == "accepted":
                    bundle.final_text = item.proposed_text
                    bundle.add_step("review:accepted")
                elif state == "rejected":
                    bundle.add_step("review:rejected")
                elif state == "edited":
                    bundle.final_text = updated.edited_text
                    bundle.add_step("human_refined")
                self._emit({"type": "bundle_updated", "bundle": _bundle_to_dict(bundle)})
            return updated

    def review_resolutions(self) -> dict[str, dict]:
        """Per-record review outcome for assembly: worst state wins
        (rejected > pending > edited > accepted)."""
        rank = {"rejected": 3, "pending": 2, "edited": 1, "accepted": 0}
        resolved: dict[str, ReviewItem] = {}
        for item in self.review_items.values():
            current = resolved.get(item.record_id)
            if current is None or rank[item.state] > rank[current.state]:
                resolved[item.record_id] = item
        return {
            record_id: {"state": item.state, "edited_text": item.edited_text}
            for record_id, item in resolved.items()
        }

    # --- jobs ----------------------------------------------------------------

    def upsert_job(self, job: Job):
        with self._lock:
            self._emit({"type": "job_upserted", "job": asdict(job)})

    def job(self, job_id: str) -> Optional[Job]:
        return self.jobs.get(job_id)

    # --- dedup -----------------------------------------------------------------

    def set_dedup(self, dropped: set[str], lines: list[str]):
        with self._lock:
            self._emit({"type": "dedup_updated", "dropped": sorted(dropped), "lines": lines})
