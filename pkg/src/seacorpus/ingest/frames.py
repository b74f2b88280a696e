"""Keyframe extraction backends.

Actual video decoding is delegated to an external tool invoked once per
planned timestamp; the synthetic backend generates deterministic frames so
pipelines can run without any video files or decoder installed.
"""

from __future__ import annotations

import hashlib
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np
from PIL import Image

from ..errors import UndecodableImage
from .records import decode_image


class FrameExtractor(Protocol):
    def extract(self, video_uri: str, timestamp: float) -> Image.Image: ...


@dataclass
class SyntheticFrameExtractor:
    """Deterministic pseudo-frames keyed by (video, timestamp)."""

    seed: int = 0
    size: tuple[int, int] = (96, 96)

    def extract(self, video_uri: str, timestamp: float) -> Image.Image:
        key = f"{self.seed}:{video_uri}:{timestamp:.3f}"
        digest = hashlib.sha256(key.encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        w, h = self.size
        pixels = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
        return Image.fromarray(pixels, mode="RGB")


@dataclass
class CommandFrameExtractor:
    """Shells out to a frame grabber; template gets {src}, {t}, {out}."""

    command_template: str

    def extract(self, video_uri: str, timestamp: float) -> Image.Image:
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "frame.png"
            command = [
                part.format(src=video_uri, t=f"{timestamp:.3f}", out=str(out))
                for part in shlex.split(self.command_template)
            ]
            proc = subprocess.run(command, capture_output=True)
            if proc.returncode != 0 or not out.exists():
                raise UndecodableImage(
                    f"frame extraction failed at t={timestamp}: {proc.stderr.decode(errors='replace')[:200]}"
                )
            return decode_image(out)


def make_frame_extractor(spec: str, seed: int = 0) -> FrameExtractor:
    if spec in ("", "synthetic"):
        return SyntheticFrameExtractor(seed=seed)
    return CommandFrameExtractor(command_template=spec)
