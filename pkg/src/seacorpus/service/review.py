"""Routing policy for the human review queue.

Highest-uncertainty pairs go to a curator first: every subtitle-aligned
pair, every pair whose candidate similarity sits in the margin band around
the selection cutoff, and a seeded audit sample of the rest.
"""

from __future__ import annotations

import hashlib
from typing import Optional

from ..config import ReviewConfig
from ..ingest.records import MediaRecord, Source


def audit_fraction(record_id: str, seed: int) -> float:
    digest = hashlib.sha256(f"audit:{seed}:{record_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


def route_for_review(
    record: MediaRecord,
    max_similarity_to_longest: Optional[float],
    config: ReviewConfig,
    seed: int,
) -> Optional[str]:
    """Return the review reason for this pair, or None to skip review."""
    if record.source == Source.VIDEO_SUBTITLED:
        return "subtitle_aligned"
    if (
        max_similarity_to_longest is not None
        and config.band_low <= max_similarity_to_longest < config.band_high
    ):
        return "low_similarity_margin"
    if audit_fraction(record.record_id, seed) < config.audit_rate:
        return "sampled_audit"
    return None
