"""Keyframe planning for video sources.

Videos without subtitles get one keyframe every 10 seconds starting at t=0;
subtitled videos get exactly one keyframe per cue, at the cue midpoint.
Frame extraction itself is delegated to an external tool that is invoked
with the planned timestamps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

from .subtitles import SubtitleCue

FIXED_INTERVAL_SECONDS = 10.0


@dataclass(frozen=True)
class KeyframeSpec:
    timestamp: float
    alignment: Literal["fixed", "cue"]
    ordinal: int  # interval ordinal k for fixed cadence, cue index otherwise
    expected_text: Optional[str] = None


def plan_keyframes(
    duration: float, cues: Optional[Sequence[SubtitleCue]] = None
) -> list[KeyframeSpec]:
    """Plan keyframe timestamps for a video of `duration` seconds.

    With cues, the plan has one entry per cue at (start+end)/2 carrying the
    cue text; without, timestamps are {0, 10, 20, ...} up to the duration.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    if cues:
        return [
            KeyframeSpec(
                timestamp=(cue.start + cue.end) / 2.0,
                alignment="cue",
                ordinal=cue.index,
                expected_text=cue.text,
            )
            for cue in cues
        ]
    count = int(math.floor(duration / FIXED_INTERVAL_SECONDS)) + 1
    return [
        KeyframeSpec(timestamp=FIXED_INTERVAL_SECONDS * k, alignment="fixed", ordinal=k)
        for k in range(count)
    ]
