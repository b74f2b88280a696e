"""Synthetic demo corpus generation.

Builds a small, fully deterministic corpus on disk: a dataset dump, a web
page, subtitle tracks, and a three-taxon knowledge base. Used by the demo
scripts and the end-to-end tests; no real media is required anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

TAXA = (
    ("Amphiprion ocellaris", "clown anemonefish"),
    ("Arothron nigropunctatus", "blackspotted puffer"),
    ("Chelonia mydas", "green sea turtle"),
)

FACT_ROWS = [
    # taxon index, attribute path, text
    (0, "distribution", "Native to the eastern Indian Ocean and western Pacific."),
    (0, "habitat > reef association", "Lives among the tentacles of host sea anemones."),
    (0, "feeding diet", "Feeds on zooplankton, algae, and small invertebrates."),
    (0, "size > maximum length", "Reaches about 11 centimetres in total length."),
    (0, "color > base coloration", "Bright orange with three white bars edged in black."),
    (0, "reproduction > reproductive mode", "Protandrous hermaphrodite; all begin life as males."),
    (1, "distribution", "Widespread on Indo-Pacific coral reefs."),
    (1, "feeding diet", "Feeds on corals, sponges, algae, and crustaceans."),
    (1, "size > maximum length", "Grows to roughly 33 centimetres."),
    (1, "color > color pattern", "Grey body scattered with small black spots."),
    (1, "physiology > toxicity", "Skin and organs carry tetrodotoxin and are poisonous."),
    (2, "distribution", "Found in tropical and subtropical oceans worldwide."),
    (2, "feeding diet", "Adults graze mainly on seagrasses and algae."),
    (2, "size > maximum weight", "Large adults can exceed 160 kilograms."),
    (2, "habitat > nursery areas", "Juveniles shelter in bays and coastal seagrass meadows."),
    (2, "conservation > conservation status", "Listed as endangered across much of its range."),
    (2, "reproduction > spawning season", "Nesting peaks in the warm season on natal beaches."),
]

SUBTITLE_CUES = [
    (1.0, 4.0, "A clown anemonefish shelters in its host anemone."),
    (5.0, 8.5, "The anemone's tentacles protect it from predators."),
    (10.0, 13.0, "Nearby, a blackspotted puffer inspects the coral."),
    (14.0, 17.5, "Puffers crush hard-shelled prey with fused teeth."),
    (19.0, 22.0, "A green sea turtle glides over the reef flat."),
    (23.0, 27.0, "Turtles surface every few minutes to breathe."),
    (29.0, 32.0, "Seagrass meadows feed grazing green turtles."),
    (34.0, 37.0, "The reef crest takes the force of the waves."),
    (39.0, 42.5, "Schools of fusiliers stream along the drop-off."),
    (44.0, 47.0, "An anemone city hosts several clownfish families."),
    (49.0, 52.0, "The puffer retreats into a crevice to rest."),
    (54.0, 58.0, "Dusk brings hunting jacks onto the reef."),
]


@dataclass
class DemoCorpus:
    root: Path
    dump: Path
    html: Path
    base_uri: str
    facts: Path
    taxa: Path
    subtitles: Path
    video_plain: dict = field(default_factory=dict)
    video_subtitled: dict = field(default_factory=dict)
    near_duplicate_pair: tuple[str, str] = ("", "")
    expected_records: int = 0


def _image(seed: str, size: tuple[int, int] = (96, 96)) -> Image.Image:
    import hashlib

    digest = hashlib.sha256(seed.encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
    w, h = size
    return Image.fromarray(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8), mode="RGB")


def build_demo_corpus(
    root: Path,
    *,
    dump_lines: int = 125,
    plain_video_duration: float = 600.0,
) -> DemoCorpus:
    """Write the demo corpus under `root` and describe it.

    Dump + web page + one subtitled and one plain video together yield
    125 + 2 + 12 + 61 = 200 ingested records at the defaults.
    """
    root = Path(root).resolve()
    images_dir = root / "source_images"
    images_dir.mkdir(parents=True, exist_ok=True)

    # Dataset dump: annotated lines cycling the three taxa, then text-only
    # lines, with one near-duplicate pixel perturbation planted at the end.
    dump_path = root / "dump.tsv"
    lines = []
    annotated = min(dump_lines - 1, 99)
    for i in range(dump_lines - 1):
        image = _image(f"dump-{i}")
        path = images_dir / f"dump_{i:03d}.png"
        image.save(path)
        if i < annotated:
            scientific, common = TAXA[i % 3]
            text = f"A photo of {common.lower()}." if i % 4 == 0 else ""
            lines.append(f"{path}\t{scientific}\t{text}".rstrip("\t"))
        else:
            lines.append(f"{path}\t\tAn unlabeled reef scene, number {i}.")
    # Near duplicate of dump-0: one pixel nudged, so pixels differ but the
    # difference hash stays within a couple of bits.
    from .ingest.records import pixel_hash

    original = _image("dump-0")
    base = np.asarray(original).copy()
    base[0, 0, 0] = (int(base[0, 0, 0]) + 1) % 256
    near_dup = Image.fromarray(base, mode="RGB")
    near_dup_path = images_dir / "dump_neardup.png"
    near_dup.save(near_dup_path)
    scientific, _ = TAXA[0]
    lines.append(f"{near_dup_path}\t{scientific}\t")
    dump_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    near_duplicate_pair = (pixel_hash(original), pixel_hash(near_dup))

    # Web page: one captioned figure, one alt image, one bare image far
    # from any text block.
    html_path = root / "page.html"
    for name in ("web_a", "web_b", "web_c"):
        _image(name, size=(128, 96)).save(images_dir / f"{name}.png")
    padding = "<!-- " + "pad " * 150 + "-->"
    html_path.write_text(
        "<html><body>\n"
        "<figure>\n"
        f'  <img src="source_images/web_a.png">\n'
        "  <figcaption>A clown anemonefish peeks from its anemone.</figcaption>\n"
        "</figure>\n"
        '<img src="source_images/web_b.png" alt="Blackspotted puffer resting under a ledge">\n'
        f"{padding}\n"
        '<img src="source_images/web_c.png">\n'
        "</body></html>\n",
        encoding="utf-8",
    )

    # Knowledge base: taxa + facts against the shipped default schema.
    taxa_path = root / "taxa.tsv"
    taxa_path.write_text(
        "\n".join(
            f"{scientific}\t{common}\tkingdom:Animalia;phylum:Chordata"
            for scientific, common in TAXA
        )
        + "\n",
        encoding="utf-8",
    )
    facts_path = root / "facts.tsv"
    facts_path.write_text(
        "\n".join(
            f"{TAXA[taxon][0]}\t{key}\t{text}\thttps://knowledge.example/{taxon}"
            for taxon, key, text in FACT_ROWS
        )
        + "\n",
        encoding="utf-8",
    )

    # Subtitle track for the subtitled video.
    def stamp(t: float) -> str:
        ms = round(t * 1000)
        return f"{ms // 3600000:02d}:{ms % 3600000 // 60000:02d}:{ms % 60000 // 1000:02d},{ms % 1000:03d}"

    subtitles_path = root / "documentary.srt"
    blocks = [
        f"{i}\n{stamp(start)} --> {stamp(end)}\n{text}"
        for i, (start, end, text) in enumerate(SUBTITLE_CUES, start=1)
    ]
    subtitles_path.write_text("\n\n".join(blocks) + "\n", encoding="utf-8")

    plain_frames = int(plain_video_duration // 10) + 1
    corpus = DemoCorpus(
        root=root,
        dump=dump_path,
        html=html_path,
        base_uri=html_path.parent.as_uri() + "/",
        facts=facts_path,
        taxa=taxa_path,
        subtitles=subtitles_path,
        video_plain={"uri": "demo://survey-dive", "duration": plain_video_duration},
        video_subtitled={
            "uri": "demo://reef-documentary",
            "duration": 60.0,
            "subtitles": str(subtitles_path),
        },
        near_duplicate_pair=near_duplicate_pair,
        expected_records=dump_lines + 2 + len(SUBTITLE_CUES) + plain_frames,
    )
    return corpus
