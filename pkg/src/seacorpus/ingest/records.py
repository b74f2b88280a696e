"""Media records and dataset-dump import.

A record's identity is the SHA-256 of its decoded pixels (RGB bytes plus
dimensions), so byte-different re-encodings of the same image collapse to
one record at ingestion.
"""

from __future__ import annotations

import hashlib
import io
import struct
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Union

from PIL import Image, UnidentifiedImageError

from ..errors import ManifestUnreadable, UndecodableImage


class Source(str, Enum):
    WEB = "web"
    VIDEO_SUBTITLED = "video_subtitled"
    VIDEO_PLAIN = "video_plain"
    DATASET_DUMP = "dataset_dump"
    PRIVATE_SURVEY = "private_survey"


@dataclass(frozen=True)
class MediaRecord:
    record_id: str
    source: Source
    origin_uri: str
    category_annotation: Optional[str] = None
    raw_text: Optional[str] = None
    created_at: float = field(default_factory=time.time)


@dataclass(frozen=True)
class RawPair:
    record: MediaRecord
    text: str
    extraction_rule: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("RawPair text must be non-empty")


def decode_image(data: Union[bytes, Path, str]) -> Image.Image:
    """Decode image bytes or a file path; raises UndecodableImage on failure."""
    try:
        if isinstance(data, bytes):
            img = Image.open(io.BytesIO(data))
        else:
            img = Image.open(data)
        img.load()
        return img
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise UndecodableImage(str(exc)) from exc


def pixel_hash(image: Image.Image) -> str:
    """Content hash over decoded pixels: sha256(dims + RGB bytes), hex."""
    rgb = image.convert("RGB")
    digest = hashlib.sha256()
    digest.update(struct.pack(">II", rgb.width, rgb.height))
    digest.update(rgb.tobytes())
    return digest.hexdigest()


@dataclass(frozen=True)
class SkippedLine:
    line_no: int
    reason: str


@dataclass
class DumpImportResult:
    records: list[MediaRecord]
    images: dict[str, Image.Image]  # record_id -> decoded image
    skipped: list[SkippedLine]


def import_records(dump: Union[str, Path]) -> DumpImportResult:
    """Import a dataset-dump manifest: one tab-separated line per record,
    `image_path<TAB>category<TAB>text` with category/text optional.

    Relative image paths resolve against the manifest's directory. Invalid
    lines are skipped and reported with their line numbers; an unreadable
    manifest as a whole raises ManifestUnreadable.
    """
    dump = Path(dump)
    try:
        lines = dump.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise ManifestUnreadable(f"{dump}: {exc}") from exc

    records: list[MediaRecord] = []
    images: dict[str, Image.Image] = {}
    skipped: list[SkippedLine] = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        fields = line.rstrip("\n").split("\t")
        image_path = Path(fields[0])
        if not image_path.is_absolute():
            image_path = dump.parent / image_path
        category = fields[1].strip() if len(fields) > 1 and fields[1].strip() else None
        text = fields[2].strip() if len(fields) > 2 and fields[2].strip() else None
        try:
            image = decode_image(image_path)
        except UndecodableImage as exc:
            skipped.append(SkippedLine(line_no, str(exc)))
            continue
        record = MediaRecord(
            record_id=pixel_hash(image),
            source=Source.DATASET_DUMP,
            origin_uri=str(image_path),
            category_annotation=category,
            raw_text=text,
        )
        records.append(record)
        images.setdefault(record.record_id, image)
    return DumpImportResult(records=records, images=images, skipped=skipped)
