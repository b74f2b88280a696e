"""Near-duplicate detection and pair filtering.

The image hash is a fixed 64-bit difference hash with a bit-exact
definition (9x8 box-filtered grayscale, strict left>right comparisons,
row-major MSB-first packing) so hashes can be golden-file tested and
compared across runs and machines.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from PIL import Image

from .errors import UndecodableImage

DHASH_ALGO = "dhash-9x8"
DEFAULT_MAX_HAMMING = 8

_URL_TOKEN_RE = re.compile(r"^(https?://|www\.)\S+$", re.IGNORECASE)


@dataclass(frozen=True)
class ImageHash:
    bits: int
    algo: str = DHASH_ALGO


def _luma(pixels: np.ndarray) -> np.ndarray:
    if pixels.ndim == 2:
        return pixels.astype(np.float64)
    r = pixels[..., 0].astype(np.float64)
    g = pixels[..., 1].astype(np.float64)
    b = pixels[..., 2].astype(np.float64)
    return np.floor(0.299 * r + 0.587 * g + 0.114 * b + 0.5)


def _box_means(gray: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    h, w = gray.shape
    # Replicate pixels of tiny inputs so every box is non-empty.
    if w < out_w:
        gray = np.repeat(gray, -(-out_w // w), axis=1)
        w = gray.shape[1]
    if h < out_h:
        gray = np.repeat(gray, -(-out_h // h), axis=0)
        h = gray.shape[0]
    xs = [w * k // out_w for k in range(out_w + 1)]
    ys = [h * k // out_h for k in range(out_h + 1)]
    means = np.empty((out_h, out_w), dtype=np.float64)
    for i in range(out_h):
        for j in range(out_w):
            means[i, j] = gray[ys[i] : ys[i + 1], xs[j] : xs[j + 1]].mean()
    return means


def dhash(pixels: Union[np.ndarray, Image.Image]) -> ImageHash:
    """64-bit difference hash of decoded pixels.

    Grayscale via luma (rounded 0.299R+0.587G+0.114B), box-filter resize to
    9x8, then per row emit 1 for each strictly-brighter left pixel over its
    right neighbour; bits pack row-major with the first comparison as MSB.
    """
    if isinstance(pixels, Image.Image):
        pixels = np.asarray(pixels.convert("RGB"))
    pixels = np.asarray(pixels)
    if pixels.ndim not in (2, 3) or pixels.size == 0:
        raise UndecodableImage(f"unsupported pixel array shape {pixels.shape}")
    means = _box_means(_luma(pixels), out_w=9, out_h=8)
    bits = 0
    for row in range(8):
        for col in range(8):
            bits = (bits << 1) | int(means[row, col] > means[row, col + 1])
    return ImageHash(bits=bits)


def hamming(a: ImageHash, b: ImageHash) -> int:
    return (a.bits ^ b.bits).bit_count()


@dataclass
class DedupReport:
    # (canonical record_id, sorted member record_ids) per cluster
    clusters: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)
    dropped_count: int = 0

    @property
    def dropped_ids(self) -> set[str]:
        return {m for _, members in self.clusters for m in members[1:]}

    def to_lines(self, hashes: dict[str, ImageHash]) -> list[str]:
        """Line-oriented export: canonical<TAB>member<TAB>distance."""
        lines = []
        for canonical, members in self.clusters:
            for member in members:
                distance = hamming(hashes[canonical], hashes[member])
                lines.append(f"{canonical}\t{member}\t{distance}")
        return lines


def cluster_near_duplicates(
    hashes: dict[str, ImageHash], max_hamming: int = DEFAULT_MAX_HAMMING
) -> DedupReport:
    """Transitively cluster records whose hash distance is <= max_hamming.

    The lexicographically smallest record_id of each cluster is canonical;
    all other members count as dropped. Output is independent of the input
    ordering.
    """
    ids = sorted(hashes)
    parent = {record_id: record_id for record_id in ids}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str):
        ra, rb = find(a), find(b)
        if ra != rb:
            # Smaller id wins the root so canonicals fall out of find().
            if rb < ra:
                ra, rb = rb, ra
            parent[rb] = ra

    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            if hamming(hashes[a], hashes[b]) <= max_hamming:
                union(a, b)

    groups: dict[str, list[str]] = {}
    for record_id in ids:
        groups.setdefault(find(record_id), []).append(record_id)

    clusters = [(root, tuple(sorted(members))) for root, members in sorted(groups.items())]
    dropped = sum(len(members) - 1 for _, members in clusters)
    return DedupReport(clusters=clusters, dropped_count=dropped)


# --- filters ------------------------------------------------------------------


@dataclass(frozen=True)
class FilterConfig:
    min_words_pretrain: int = 3
    min_words_finetune: int = 8
    min_image_dim: int = 64


@dataclass(frozen=True)
class FilterResult:
    passed: bool
    reasons: tuple[str, ...] = ()


def apply_filters(
    caption: str,
    stage: str,
    image_size: Optional[tuple[int, int]],
    rules: FilterConfig = FilterConfig(),
) -> FilterResult:
    """Pure pass/fail filter over one pair; reasons name every failed rule."""
    reasons = []
    words = caption.split()
    min_words = rules.min_words_finetune if stage == "finetune" else rules.min_words_pretrain
    if len(words) < min_words:
        reasons.append("CaptionTooShort")
    if words and all(_URL_TOKEN_RE.match(w) for w in words):
        reasons.append("CaptionUrlOnly")
    if image_size is not None and min(image_size) < rules.min_image_dim:
        reasons.append("ImageTooSmall")
    return FilterResult(passed=not reasons, reasons=tuple(reasons))
