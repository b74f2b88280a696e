"""Raw material acquisition: subtitles, keyframes, web pages, dataset dumps."""

from .fetch import Fetcher, PolitenessConfig, fetch_resource
from .keyframes import FIXED_INTERVAL_SECONDS, KeyframeSpec, plan_keyframes
from .records import (
    DumpImportResult,
    MediaRecord,
    RawPair,
    SkippedLine,
    Source,
    decode_image,
    import_records,
    pixel_hash,
)
from .subtitles import SubtitleCue, parse_subtitles, serialize_subtitles
from .web import PROXIMITY_WINDOW, WebPairCandidate, extract_web_pairs

__all__ = [
    "FIXED_INTERVAL_SECONDS",
    "PROXIMITY_WINDOW",
    "DumpImportResult",
    "Fetcher",
    "KeyframeSpec",
    "MediaRecord",
    "PolitenessConfig",
    "RawPair",
    "SkippedLine",
    "Source",
    "SubtitleCue",
    "WebPairCandidate",
    "decode_image",
    "extract_web_pairs",
    "fetch_resource",
    "import_records",
    "parse_subtitles",
    "pixel_hash",
    "plan_keyframes",
    "serialize_subtitles",
]
