from seacorpus.config import PipelineConfig, load_config
from seacorpus.service.review import route_for_review
from seacorpus.ingest.records import MediaRecord, Source


def test_defaults_without_file():
    config = load_config(None)
    assert config.thresholds.similarity == 0.85
    assert config.thresholds.max_hamming == 8
    assert config.thresholds.caption_cap == 512
    assert config.politeness.min_host_interval == 1.0
    assert config.politeness.attempts == 3
    assert config.politeness.backoff_base == 0.5
    assert config.review.band_low == 0.80
    assert config.review.band_high == 0.90
    assert config.review.audit_rate == 0.05
    assert config.api_token is None


def test_ini_overrides(tmp_path):
    path = tmp_path / "pipeline.ini"
    path.write_text(
        """
[clients]
captioner = http://cap.example/api
llm = stub://9

[thresholds]
similarity = 0.8
caption_cap = 256

[politeness]
min_host_interval = 0.25
denied_hosts = bad.example, worse.example

[review]
audit_rate = 0.1

[filters]
min_words_finetune = 12

[service]
api_token = hunter2
""",
        encoding="utf-8",
    )
    config = load_config(path)
    assert config.clients.captioner == "http://cap.example/api"
    assert config.clients.llm == "stub://9"
    assert config.clients.embedder == "offline"  # untouched default
    assert config.thresholds.similarity == 0.8
    assert config.thresholds.caption_cap == 256
    assert config.politeness.min_host_interval == 0.25
    assert config.politeness.denied_hosts == frozenset({"bad.example", "worse.example"})
    assert config.review.audit_rate == 0.1
    assert config.filters.min_words_finetune == 12
    assert config.api_token == "hunter2"


def record(source=Source.DATASET_DUMP, record_id="ab" * 32):
    return MediaRecord(record_id=record_id, source=source, origin_uri="x")


def test_routing_subtitle_pairs_always_reviewed():
    config = PipelineConfig().review
    reason = route_for_review(record(Source.VIDEO_SUBTITLED), 0.2, config, seed=0)
    assert reason == "subtitle_aligned"


def test_routing_margin_band():
    config = PipelineConfig().review
    assert route_for_review(record(), 0.84, config, seed=0) == "low_similarity_margin"
    assert route_for_review(record(), 0.80, config, seed=0) == "low_similarity_margin"
    # 0.90 sits outside the half-open band
    assert route_for_review(record(), 0.90, config, seed=0) != "low_similarity_margin"
    assert route_for_review(record(), 0.95, config, seed=0) != "low_similarity_margin"


def test_routing_audit_sample_rate_and_determinism():
    config = PipelineConfig().review
    routed = 0
    for i in range(2000):
        r = record(record_id=f"{i:064x}")
        first = route_for_review(r, None, config, seed=1)
        assert first == route_for_review(r, None, config, seed=1)
        if first == "sampled_audit":
            routed += 1
    assert 0.03 <= routed / 2000 <= 0.07  # around the 5% default
