"""SRT and WebVTT subtitle parsing and serialization.

Both formats round-trip bit-exactly for valid tracks: ``parse(serialize(cues))``
returns the original cue list. Timestamps are kept at millisecond precision;
styling tags are stripped from cue text on parse.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import MalformedTimestamp

_TAG_RE = re.compile(r"<[^<>]*>")
_SRT_TIME_RE = re.compile(r"^(\d+):([0-5]?\d):([0-5]?\d)[,.](\d{1,3})$")
_VTT_TIME_RE = re.compile(r"^(?:(\d+):)?([0-5]?\d):([0-5]?\d)\.(\d{1,3})$")


@dataclass(frozen=True)
class SubtitleCue:
    """One subtitle cue: ``start < end``, ``text`` non-empty after trimming."""

    index: int
    start: float
    end: float
    text: str


def _seconds(hours: int, minutes: int, secs: int, millis: int) -> float:
    return hours * 3600 + minutes * 60 + secs + millis / 1000.0


def _parse_srt_time(token: str, line_no: int, line: str) -> float:
    m = _SRT_TIME_RE.match(token.strip())
    if not m:
        raise MalformedTimestamp(line_no, line)
    h, mn, s, ms = m.groups()
    return _seconds(int(h), int(mn), int(s), int(ms.ljust(3, "0")))


def _parse_vtt_time(token: str, line_no: int, line: str) -> float:
    m = _VTT_TIME_RE.match(token.strip())
    if not m:
        raise MalformedTimestamp(line_no, line)
    h, mn, s, ms = m.groups()
    return _seconds(int(h or 0), int(mn), int(s), int(ms.ljust(3, "0")))


def format_timestamp(seconds: float, *, vtt: bool) -> str:
    """Render seconds as ``HH:MM:SS,mmm`` (SRT) or ``HH:MM:SS.mmm`` (VTT)."""
    total_ms = round(seconds * 1000)
    h, rem = divmod(total_ms, 3_600_000)
    m, rem = divmod(rem, 60_000)
    s, ms = divmod(rem, 1000)
    sep = "." if vtt else ","
    return f"{h:02d}:{m:02d}:{s:02d}{sep}{ms:03d}"


def _clean_text(lines: list[str]) -> str:
    parts = []
    for raw in lines:
        stripped = _TAG_RE.sub("", raw).strip()
        if stripped:
            parts.append(stripped)
    return " ".join(parts)


def _decode(data: bytes) -> list[str]:
    text = data.decode("utf-8-sig")
    return text.splitlines()


def _normalize(raw: list[tuple[int | None, float, float, str]]) -> list[SubtitleCue]:
    """Sort by start, clamp overlaps, drop degenerate cues, fix indices.

    Overlapping neighbours are resolved by clamping the earlier cue's end
    down to the later cue's start; cues left with start >= end are dropped.
    """
    entries = sorted((e for e in raw if e[3]), key=lambda e: (e[1], e[2]))
    clamped: list[tuple[int | None, float, float, str]] = []
    for i, (idx, start, end, text) in enumerate(entries):
        if i + 1 < len(entries):
            end = min(end, entries[i + 1][1])
        if start < end:
            clamped.append((idx, start, end, text))

    indices = [idx for idx, *_ in clamped]
    monotonic = (
        all(isinstance(i, int) and i >= 1 for i in indices)
        and all(b > a for a, b in zip(indices, indices[1:]))  # type: ignore[operator]
    )
    return [
        SubtitleCue(index=idx if monotonic else pos, start=start, end=end, text=text)  # type: ignore[arg-type]
        for pos, (idx, start, end, text) in enumerate(clamped, start=1)
    ]


def _parse_srt(lines: list[str]) -> list[SubtitleCue]:
    raw: list[tuple[int | None, float, float, str]] = []
    i = 0
    n = len(lines)
    while i < n:
        if not lines[i].strip():
            i += 1
            continue
        index: int | None = None
        line = lines[i].strip()
        if "-->" not in line:
            try:
                index = int(line)
            except ValueError:
                raise MalformedTimestamp(i + 1, lines[i])
            i += 1
            if i >= n:
                break
            line = lines[i].strip()
        if "-->" not in line:
            raise MalformedTimestamp(i + 1, lines[i])
        left, _, right = line.partition("-->")
        start = _parse_srt_time(left, i + 1, lines[i])
        end = _parse_srt_time(right.split()[0] if right.split() else right, i + 1, lines[i])
        i += 1
        text_lines = []
        while i < n and lines[i].strip():
            text_lines.append(lines[i])
            i += 1
        raw.append((index, start, end, _clean_text(text_lines)))
    return _normalize(raw)


def _parse_vtt(lines: list[str]) -> list[SubtitleCue]:
    i = 0
    n = len(lines)
    # Header block: "WEBVTT" plus optional metadata up to the first blank line.
    if i < n and lines[i].strip().startswith("WEBVTT"):
        i += 1
        while i < n and lines[i].strip():
            i += 1

    raw: list[tuple[int | None, float, float, str]] = []
    while i < n:
        if not lines[i].strip():
            i += 1
            continue
        block_head = lines[i].strip()
        if block_head.startswith(("NOTE", "STYLE", "REGION")):
            while i < n and lines[i].strip():
                i += 1
            continue
        index: int | None = None
        if "-->" not in block_head:
            try:
                index = int(block_head)
            except ValueError:
                index = None
            i += 1
            if i >= n:
                break
            block_head = lines[i].strip()
        if "-->" not in block_head:
            raise MalformedTimestamp(i + 1, lines[i])
        left, _, right = block_head.partition("-->")
        right_token = right.split()[0] if right.split() else right
        start = _parse_vtt_time(left, i + 1, lines[i])
        end = _parse_vtt_time(right_token, i + 1, lines[i])
        i += 1
        text_lines = []
        while i < n and lines[i].strip():
            text_lines.append(lines[i])
            i += 1
        raw.append((index, start, end, _clean_text(text_lines)))
    return _normalize(raw)


def parse_subtitles(data: bytes, format: str) -> list[SubtitleCue]:
    """Parse an SRT or WebVTT track into normalized cues.

    Empty input yields an empty list. Raises :class:`MalformedTimestamp`
    (with the offending line number) on bad time syntax.
    """
    if format not in ("srt", "vtt"):
        raise ValueError(f"unknown subtitle format: {format!r}")
    lines = _decode(data)
    if not any(line.strip() for line in lines):
        return []
    return _parse_srt(lines) if format == "srt" else _parse_vtt(lines)


def serialize_subtitles(cues: list[SubtitleCue], format: str) -> str:
    """Render cues to SRT or WebVTT text."""
    if format not in ("srt", "vtt"):
        raise ValueError(f"unknown subtitle format: {format!r}")
    blocks = []
    for cue in cues:
        stamp = (
            f"{format_timestamp(cue.start, vtt=format == 'vtt')} --> "
            f"{format_timestamp(cue.end, vtt=format == 'vtt')}"
        )
        blocks.append(f"{cue.index}\n{stamp}\n{cue.text}")
    body = "\n\n".join(blocks)
    if format == "vtt":
        return "WEBVTT\n\n" + body + ("\n" if body else "")
    return body + ("\n" if body else "")
