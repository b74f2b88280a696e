import io
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from seacorpus.errors import UndecodableImage
from seacorpus.quality import (
    DEFAULT_MAX_HAMMING,
    FilterConfig,
    ImageHash,
    apply_filters,
    cluster_near_duplicates,
    dhash,
    hamming,
)


def oracle_clusters(hashes: dict[str, ImageHash], max_hamming: int):
    """Independent oracle: all-pairs Hamming then BFS transitive closure."""
    ids = sorted(hashes)
    neighbours = {i: set() for i in ids}
    for a in ids:
        for b in ids:
            if a < b and bin(hashes[a].bits ^ hashes[b].bits).count("1") <= max_hamming:
                neighbours[a].add(b)
                neighbours[b].add(a)
    seen, clusters = set(), []
    for start in ids:
        if start in seen:
            continue
        group, frontier = set(), [start]
        while frontier:
            node = frontier.pop()
            if node in group:
                continue
            group.add(node)
            frontier.extend(neighbours[node] - group)
        seen |= group
        members = tuple(sorted(group))
        clusters.append((members[0], members))
    return sorted(clusters)


# --- dhash ---------------------------------------------------------------


def test_uniform_gray_hashes_to_zero():
    image = np.full((64, 64, 3), 128, dtype=np.uint8)
    assert dhash(image).bits == 0


def test_monotone_gradient_hashes_to_zero():
    # Strictly dark-to-light left to right: every left < right.
    row = np.linspace(0, 255, 90, dtype=np.uint8)
    image = np.tile(row, (40, 1))
    assert dhash(image).bits == 0


def test_decreasing_gradient_hashes_to_all_ones():
    row = np.linspace(255, 0, 90, dtype=np.uint8)
    image = np.tile(row, (40, 1))
    assert dhash(image).bits == (1 << 64) - 1


def test_reencoded_copy_hashes_identically():
    rng = np.random.default_rng(5)
    pixels = rng.integers(0, 256, size=(48, 56, 3), dtype=np.uint8)
    image = Image.fromarray(pixels)
    png, bmp = io.BytesIO(), io.BytesIO()
    image.save(png, format="PNG")
    image.save(bmp, format="BMP")
    a = dhash(Image.open(io.BytesIO(png.getvalue())))
    b = dhash(Image.open(io.BytesIO(bmp.getvalue())))
    assert a == b
    assert a.algo == "dhash-9x8"


def test_tiny_image_still_hashable():
    image = np.array([[0, 255], [255, 0]], dtype=np.uint8)
    assert 0 <= dhash(image).bits < (1 << 64)


def test_empty_array_rejected():
    with pytest.raises(UndecodableImage):
        dhash(np.zeros((0, 0), dtype=np.uint8))


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**31))
def test_dhash_deterministic(seed):
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, size=(20, 25, 3), dtype=np.uint8)
    assert dhash(pixels) == dhash(pixels.copy())


# --- hamming metric ----------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(st.tuples(*[st.integers(min_value=0, max_value=2**64 - 1)] * 3))
def test_hamming_is_a_metric(bits):
    a, b, c = (ImageHash(bits=x) for x in bits)
    assert hamming(a, a) == 0
    assert hamming(a, b) == hamming(b, a)
    assert hamming(a, c) <= hamming(a, b) + hamming(b, c)


# --- clustering ----------------------------------------------------------------


def test_identical_hashes_cluster():
    hashes = {"b": ImageHash(bits=7), "a": ImageHash(bits=7)}
    report = cluster_near_duplicates(hashes, max_hamming=DEFAULT_MAX_HAMMING)
    assert report.clusters == [("a", ("a", "b"))]
    assert report.dropped_count == 1
    assert report.dropped_ids == {"b"}


def test_zero_radius_all_distinct():
    hashes = {f"r{i}": ImageHash(bits=i) for i in range(5)}
    report = cluster_near_duplicates(hashes, max_hamming=0)
    assert len(report.clusters) == 5
    assert report.dropped_count == 0


def test_planted_triple_transitively_clustered():
    h = 0b1010_1100
    hashes = {
        "x": ImageHash(bits=h),
        "y": ImageHash(bits=h ^ 0b1),
        "z": ImageHash(bits=h ^ 0b110_0000_0000),
    }
    report = cluster_near_duplicates(hashes, max_hamming=2)
    assert report.clusters == oracle_clusters(hashes, 2)
    assert len(report.clusters) == 1
    assert report.clusters[0][0] == "x"


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**31), st.integers(min_value=2, max_value=20))
def test_clustering_matches_oracle(seed, n):
    rng = random.Random(seed)
    hashes = {}
    for i in range(n):
        if hashes and rng.random() < 0.4:
            donor = hashes[rng.choice(sorted(hashes))]
            bits = donor.bits
            for _ in range(rng.randint(0, 8)):
                bits ^= 1 << rng.randrange(64)
            hashes[f"n{i:03d}"] = ImageHash(bits=bits)
        else:
            hashes[f"n{i:03d}"] = ImageHash(bits=rng.getrandbits(64))
    report = cluster_near_duplicates(hashes, max_hamming=8)
    assert sorted(report.clusters) == oracle_clusters(hashes, 8)


def test_clustering_order_independent():
    rng = random.Random(11)
    items = [(f"k{i}", ImageHash(bits=rng.getrandbits(64))) for i in range(12)]
    forward = cluster_near_duplicates(dict(items), max_hamming=20)
    backward = cluster_near_duplicates(dict(reversed(items)), max_hamming=20)
    assert forward.clusters == backward.clusters


# --- filters ----------------------------------------------------------------------


def test_filters_pass():
    caption = " ".join(["word"] * 20)
    assert apply_filters(caption, "finetune", (512, 512)).passed


def test_caption_too_short_stage1():
    result = apply_filters("two words", "pretrain", (512, 512))
    assert not result.passed
    assert "CaptionTooShort" in result.reasons


def test_stage_thresholds_differ():
    caption = "one two three four five"
    assert apply_filters(caption, "pretrain", (512, 512)).passed
    assert not apply_filters(caption, "finetune", (512, 512)).passed


def test_image_too_small():
    result = apply_filters(" ".join(["w"] * 20), "pretrain", (32, 512))
    assert "ImageTooSmall" in result.reasons


def test_url_only_caption():
    result = apply_filters("https://example.com/a.jpg", "pretrain", (512, 512))
    assert "CaptionUrlOnly" in result.reasons


def test_custom_rules():
    rules = FilterConfig(min_words_pretrain=1, min_image_dim=16)
    assert apply_filters("ok", "pretrain", (16, 16), rules).passed


def test_dedup_report_export_lines():
    hashes = {"a": ImageHash(bits=0b111), "b": ImageHash(bits=0b110), "c": ImageHash(bits=1 << 60)}
    report = cluster_near_duplicates(hashes, max_hamming=1)
    lines = report.to_lines(hashes)
    assert "a\ta\t0" in lines
    assert "a\tb\t1" in lines
    assert "c\tc\t0" in lines
    assert all(len(line.split("\t")) == 3 for line in lines)
