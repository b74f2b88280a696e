"""Image-text candidate extraction from web pages.

For every image on a page we try, in order: the enclosing figure's caption,
the image's alt text, and finally the nearest text block whose source
position lies within a fixed window of the image tag. The rule that fired
is recorded on each candidate so reviewers can audit where a caption came
from. Markup is parsed leniently; broken pages yield fewer candidates, not
errors.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from html.parser import HTMLParser
from urllib.parse import urljoin

PROXIMITY_WINDOW = 400  # source characters between an image tag and a text block

_BLOCK_TAGS = {
    "address", "article", "aside", "blockquote", "br", "div", "dd", "dl", "dt",
    "figure", "figcaption", "footer", "h1", "h2", "h3", "h4", "h5", "h6",
    "header", "hr", "li", "main", "nav", "ol", "p", "pre", "section", "table",
    "tbody", "td", "th", "tr", "ul",
}
_SKIP_TAGS = {"script", "style", "noscript", "template"}

_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class WebPairCandidate:
    """A pre-fetch image-text pairing proposed by the page heuristics."""

    image_uri: str
    text: str
    extraction_rule: str  # figcaption | alt | proximity


@dataclass
class _TextBlock:
    start: int
    end: int
    text: str


@dataclass
class _Figure:
    caption_parts: list[str]
    image_ids: list[int]


class _PageScan(HTMLParser):
    def __init__(self, line_offsets: list[int]):
        super().__init__(convert_charrefs=True)
        self._line_offsets = line_offsets
        self._skip_depth = 0
        self._buffer: list[str] = []
        self._buffer_start = 0
        self._buffer_end = 0
        self._figcaption_depth = 0
        self._figures: list[_Figure] = []
        self.blocks: list[_TextBlock] = []
        self.images: list[dict] = []

    def _abs_pos(self) -> int:
        line, col = self.getpos()
        return self._line_offsets[line - 1] + col

    def _flush(self):
        if not self._buffer:
            return
        text = _WS_RE.sub(" ", "".join(self._buffer)).strip()
        if text:
            self.blocks.append(_TextBlock(self._buffer_start, self._buffer_end, text))
        self._buffer = []

    def _open_tag(self, tag: str, attrs: list[tuple[str, str | None]]):
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
            return
        if tag == "img":
            attr_map = {k.lower(): (v or "") for k, v in attrs}
            image = {
                "pos": self._abs_pos(),
                "src": attr_map.get("src", "").strip(),
                "alt": attr_map.get("alt", "").strip(),
                "figure": self._figures[-1] if self._figures else None,
            }
            if self._figures:
                self._figures[-1].image_ids.append(len(self.images))
            self.images.append(image)
            return
        if tag == "figure":
            self._flush()
            self._figures.append(_Figure(caption_parts=[], image_ids=[]))
        elif tag == "figcaption":
            self._flush()
            self._figcaption_depth += 1
        elif tag in _BLOCK_TAGS:
            self._flush()

    def handle_starttag(self, tag, attrs):
        self._open_tag(tag.lower(), attrs)

    def handle_startendtag(self, tag, attrs):
        self._open_tag(tag.lower(), attrs)

    def handle_endtag(self, tag):
        tag = tag.lower()
        if tag in _SKIP_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
            return
        if tag == "figure":
            self._flush()
            if self._figures:
                self._figures.pop()
        elif tag == "figcaption":
            self._flush()
            self._figcaption_depth = max(0, self._figcaption_depth - 1)
        elif tag in _BLOCK_TAGS:
            self._flush()

    def handle_data(self, data):
        if self._skip_depth:
            return
        if not data.strip() and not self._buffer:
            return
        start = self._abs_pos()
        if not self._buffer:
            self._buffer_start = start
        self._buffer.append(data)
        self._buffer_end = start + len(data)
        if self._figcaption_depth and self._figures:
            self._figures[-1].caption_parts.append(data)

    def close(self):
        super().close()
        self._flush()


def _line_offsets(text: str) -> list[int]:
    offsets = [0]
    for i, ch in enumerate(text):
        if ch == "\n":
            offsets.append(i + 1)
    return offsets


def _block_distance(pos: int, block: _TextBlock) -> int:
    if block.start <= pos <= block.end:
        return 0
    return block.start - pos if pos < block.start else pos - block.end


def extract_web_pairs(html: bytes, base_uri: str) -> list[WebPairCandidate]:
    """Extract image-text candidates from an HTML page.

    Returns one candidate per image with usable text; image URIs are
    resolved against `base_uri`. Pages with no usable images yield [].
    """
    text = html.decode("utf-8", errors="replace")
    scanner = _PageScan(_line_offsets(text))
    scanner.feed(text)
    scanner.close()

    candidates: list[WebPairCandidate] = []
    for image in scanner.images:
        if not image["src"]:
            continue
        uri = urljoin(base_uri, image["src"])
        figure = image["figure"]
        caption = ""
        if figure is not None:
            caption = _WS_RE.sub(" ", "".join(figure.caption_parts)).strip()
        if caption:
            candidates.append(WebPairCandidate(uri, caption, "figcaption"))
            continue
        if image["alt"]:
            candidates.append(WebPairCandidate(uri, image["alt"], "alt"))
            continue
        best: _TextBlock | None = None
        best_distance = PROXIMITY_WINDOW + 1
        for block in scanner.blocks:
            distance = _block_distance(image["pos"], block)
            if distance < best_distance:
                best = block
                best_distance = distance
        if best is not None and best_distance <= PROXIMITY_WINDOW:
            candidates.append(WebPairCandidate(uri, best.text, "proximity"))
    return candidates
