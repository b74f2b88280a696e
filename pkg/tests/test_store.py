import threading

import numpy as np
import pytest
from PIL import Image

from seacorpus.caption import CaptionBundle, make_candidate
from seacorpus.errors import AlreadyDecided, MissingEditedText, UnknownRecord
from seacorpus.ingest.records import MediaRecord, Source, pixel_hash
from seacorpus.instruct import InstructionSample, ValidationResult
from seacorpus.service.store import CorpusStore, Job, ReviewDecision, job_fingerprint


def make_image(seed):
    rng = np.random.default_rng(seed)
    return Image.fromarray(rng.integers(0, 256, size=(70, 80, 3), dtype=np.uint8))


def make_record(seed, **kwargs):
    image = make_image(seed)
    record = MediaRecord(
        record_id=pixel_hash(image),
        source=kwargs.pop("source", Source.DATASET_DUMP),
        origin_uri=f"file:///{seed}.png",
        **kwargs,
    )
    return record, image


@pytest.fixture
def store(tmp_path):
    return CorpusStore(tmp_path / "store")


def test_add_record_idempotent(store):
    record, image = make_record(1)
    store.add_record(record, image)
    store.add_record(record, image)
    assert len(store.records) == 1
    assert store.image_size(record.record_id) == (80, 70)
    assert store.image_path(record.record_id).exists()


def test_restart_recovers_everything(tmp_path):
    root = tmp_path / "store"
    store = CorpusStore(root)
    record, image = make_record(2)
    store.add_record(record, image)
    bundle = CaptionBundle(record_id=record.record_id)
    bundle.candidates.append(make_candidate("a deep reef scene", "raw"))
    bundle.final_text = "a deep reef scene"
    bundle.add_step("selected")
    store.upsert_bundle(bundle)
    sample = InstructionSample(
        record_id=record.record_id,
        instruction="describe it",
        response="a long valid response " * 3,
        generator="llm",
        template_id=4,
        validation=ValidationResult(passed=True),
    )
    store.add_sample(sample)
    item = store.enqueue_review(record.record_id, "a deep reef scene", "sampled_audit")
    store.apply_decision(
        ReviewDecision(item_id=item.item_id, verdict="accept", reviewer="amy"), "key-1"
    )
    store.upsert_job(Job(job_id="j1", kind="ingest", params={}, state="done", done=3, total=3))

    # Simulated crash: no close/flush call, just reopen the directory.
    recovered = CorpusStore(root)
    assert recovered.records[record.record_id] == record
    assert recovered.bundles[record.record_id].final_text == "a deep reef scene"
    assert recovered.samples[f"{record.record_id}:4:llm"].validation.passed
    assert recovered.review_items[item.item_id].state == "accepted"
    assert recovered.idempotency["key-1"] == item.item_id
    assert recovered.jobs["j1"].state == "done"


def test_snapshot_then_more_events(tmp_path):
    root = tmp_path / "store"
    store = CorpusStore(root)
    r1, img1 = make_record(3)
    store.add_record(r1, img1)
    store.snapshot()
    r2, img2 = make_record(4)
    store.add_record(r2, img2)

    recovered = CorpusStore(root)
    assert set(recovered.records) == {r1.record_id, r2.record_id}


def test_enqueue_review_unknown_record(store):
    with pytest.raises(UnknownRecord):
        store.enqueue_review("deadbeef", "text", "sampled_audit")


def test_review_fifo_and_depth(store):
    r1, img1 = make_record(5)
    r2, img2 = make_record(6)
    store.add_record(r1, img1)
    store.add_record(r2, img2)
    first = store.enqueue_review(r1.record_id, "caption one", "sampled_audit")
    store.enqueue_review(r2.record_id, "caption two", "subtitle_aligned")
    assert store.pending_review_count() == 2
    assert store.next_pending_review().item_id == first.item_id


def test_decision_semantics(store):
    record, image = make_record(7)
    store.add_record(record, image)
    bundle = CaptionBundle(record_id=record.record_id)
    bundle.final_text = "proposed caption"
    store.upsert_bundle(bundle)

    item = store.enqueue_review(record.record_id, "proposed caption", "low_similarity_margin")
    updated = store.apply_decision(ReviewDecision(item_id=item.item_id, verdict="accept"))
    assert updated.state == "accepted"
    assert store.bundles[record.record_id].final_text == "proposed caption"

    with pytest.raises(AlreadyDecided):
        store.apply_decision(ReviewDecision(item_id=item.item_id, verdict="reject"))


def test_edit_requires_text_and_updates_bundle(store):
    record, image = make_record(8)
    store.add_record(record, image)
    bundle = CaptionBundle(record_id=record.record_id)
    bundle.final_text = "old caption"
    store.upsert_bundle(bundle)
    item = store.enqueue_review(record.record_id, "old caption", "subtitle_aligned")

    with pytest.raises(MissingEditedText):
        store.apply_decision(ReviewDecision(item_id=item.item_id, verdict="edit"))

    edited = "Black-spotted pufferfish over coral rubble."
    updated = store.apply_decision(
        ReviewDecision(item_id=item.item_id, verdict="edit", edited_text=edited)
    )
    assert updated.state == "edited"
    assert store.bundles[record.record_id].final_text == edited
    assert "human_refined" in store.bundles[record.record_id].provenance


def test_idempotent_decision_replay(store):
    record, image = make_record(9)
    store.add_record(record, image)
    item = store.enqueue_review(record.record_id, "text", "sampled_audit")
    first = store.apply_decision(
        ReviewDecision(item_id=item.item_id, verdict="accept"), idempotency_key="k9"
    )
    replay = store.apply_decision(
        ReviewDecision(item_id=item.item_id, verdict="reject"), idempotency_key="k9"
    )
    assert replay.state == first.state == "accepted"


def test_concurrent_decisions_apply_exactly_once(store):
    record, image = make_record(10)
    store.add_record(record, image)
    item = store.enqueue_review(record.record_id, "text", "sampled_audit")
    outcomes = []

    def decide(verdict, key):
        try:
            store.apply_decision(
                ReviewDecision(item_id=item.item_id, verdict=verdict), idempotency_key=key
            )
            outcomes.append("ok")
        except AlreadyDecided:
            outcomes.append("already")

    threads = [
        threading.Thread(target=decide, args=("accept", "ka")),
        threading.Thread(target=decide, args=("reject", "kb")),
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(outcomes) == ["already", "ok"]


def test_job_fingerprint_stable():
    a = job_fingerprint("ingest", {"dump": "x.tsv"})
    b = job_fingerprint("ingest", {"dump": "x.tsv"})
    c = job_fingerprint("ingest", {"dump": "y.tsv"})
    assert a == b != c


def test_review_resolutions_worst_state_wins(store):
    record, image = make_record(11)
    store.add_record(record, image)
    i1 = store.enqueue_review(record.record_id, "text a", "sampled_audit")
    store.enqueue_review(record.record_id, "text b", "subtitle_aligned")
    store.apply_decision(ReviewDecision(item_id=i1.item_id, verdict="accept"))
    assert store.review_resolutions()[record.record_id]["state"] == "pending"
