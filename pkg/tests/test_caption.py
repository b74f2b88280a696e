import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seacorpus.caption import (
    OfflineTfCosineBackend,
    SamplerState,
    expand_from_attributes,
    make_candidate,
    rank_candidates,
    request_candidates,
    select_and_concat,
    similarity,
    tf_cosine,
)
from seacorpus.errors import CaptionerUnavailable, EmptyCandidateSet, NoFactsForTaxon
from seacorpus.knowledge import (
    AttributeFact,
    AttributeKey,
    AttributeSchema,
    KnowledgeStore,
    TaxonRecord,
    parse_attribute_path,
)


def make_store(facts: dict[str, str], taxon="arothron nigropunctatus") -> KnowledgeStore:
    schema = AttributeSchema(
        [AttributeKey(path=parse_attribute_path(k), display_name=k) for k in facts]
    )
    store = KnowledgeStore(schema)
    store.add_taxon(
        TaxonRecord(
            taxon_id=taxon,
            scientific_name="Arothron nigropunctatus",
            common_names=("blackspotted puffer",),
        )
    )
    store.import_facts(
        [
            AttributeFact(taxon_id=taxon, key=parse_attribute_path(k), text=text, source="s")
            for k, text in facts.items()
        ]
    )
    return store


# --- expansion -----------------------------------------------------------


def test_expand_two_facts():
    store = make_store(
        {
            "distribution": "Found on Indo-Pacific reefs.",
            "feeding diet": "Feeds on algae.",
        }
    )
    state = SamplerState(taxon_id="arothron nigropunctatus")
    result = expand_from_attributes(store, "arothron nigropunctatus", 2, state)
    assert result.text.startswith("This is blackspotted puffer (Arothron nigropunctatus).")
    assert "Found on Indo-Pacific reefs." in result.text
    assert "Feeds on algae." in result.text
    assert len(result.used_facts) == 2
    assert state.cursor == 1


def test_round_robin_gives_distinct_single_fact_captions():
    store = make_store({"distribution": "Fact one.", "feeding diet": "Fact two."})
    state = SamplerState(taxon_id="arothron nigropunctatus")
    first = expand_from_attributes(store, "arothron nigropunctatus", 1, state)
    second = expand_from_attributes(store, "arothron nigropunctatus", 1, state)
    assert first.text != second.text
    assert first.used_facts != second.used_facts


def test_unknown_taxon_raises():
    store = make_store({"distribution": "x."})
    with pytest.raises(NoFactsForTaxon):
        expand_from_attributes(store, "unknown taxon", 1, SamplerState(taxon_id="unknown taxon"))


def test_expansion_longer_than_annotation():
    store = make_store({"distribution": "Found widely."})
    result = expand_from_attributes(
        store, "arothron nigropunctatus", 1, SamplerState(taxon_id="arothron nigropunctatus")
    )
    assert len(result.text) > len("arothron nigropunctatus")


# --- captioner client ------------------------------------------------------


class ListCaptioner:
    def __init__(self, texts, fail_times=0):
        self.texts = texts
        self.fail_times = fail_times
        self.calls = 0

    def sample(self, record_id, n):
        self.calls += 1
        if self.calls <= self.fail_times:
            raise CaptionerUnavailable("down")
        return self.texts[:n]


def test_request_candidates_distinct():
    client = ListCaptioner(["one fish", "two fish", "red fish", "blue fish", "old fish"])
    candidates = request_candidates(client, "r1", 5)
    assert len(candidates) == 5
    assert all(c.origin == "captioner_sample" for c in candidates)
    assert all(c.length == len(c.text) for c in candidates)


def test_request_candidates_collapses_exact_duplicates():
    client = ListCaptioner(["a", "a", "b"])
    candidates = request_candidates(client, "r1", 3)
    assert [c.text for c in candidates] == ["a", "b"]


def test_request_candidates_unreachable():
    client = ListCaptioner(["x"], fail_times=99)
    with pytest.raises(CaptionerUnavailable):
        request_candidates(client, "r1", 1, attempts=3)
    assert client.calls == 3


def test_request_candidates_retries_then_succeeds():
    client = ListCaptioner(["one deep reef"], fail_times=2)
    candidates = request_candidates(client, "r1", 1, attempts=3)
    assert [c.text for c in candidates] == ["one deep reef"]


# --- similarity --------------------------------------------------------------


def test_similarity_identity():
    assert similarity("a reef shark", "a reef shark") == 1.0


def test_similarity_hand_computed():
    # tokens {a,b,c,d} vs {a,b,x,y}: dot=2, |a|=|b|=2 -> 2/(2*2)=0.5
    assert tf_cosine("a b c d", "a b x y") == 0.5


def test_similarity_empty_is_zero():
    assert similarity("", "anything") == 0.0
    assert similarity("anything", "") == 0.0


@settings(max_examples=100, deadline=None)
@given(
    st.text(st.characters(whitelist_categories=("L", "N", "Zs")), max_size=40),
    st.text(st.characters(whitelist_categories=("L", "N", "Zs")), max_size=40),
)
def test_similarity_symmetric_and_bounded(a, b):
    s = tf_cosine(a, b)
    assert s == tf_cosine(b, a)
    assert 0.0 <= s <= 1.0 + 1e-12


# --- selection ----------------------------------------------------------------


class TableBackend:
    """Prescribed pairwise scores keyed by unordered text pair."""

    def __init__(self, table):
        self.table = table

    def score(self, a, b):
        return self.table.get((a, b), self.table.get((b, a), 0.0))


def test_select_example_with_prescribed_similarities():
    texts = {
        50: "L" * 50,
        40: "M" * 40,
        30: "N" * 30,
        20: "O" * 20,
        10: "P" * 10,
    }
    candidates = [make_candidate(t, "captioner_sample") for t in texts.values()]
    base = texts[50]
    backend = TableBackend(
        {
            (texts[40], base): 0.9,
            (texts[30], base): 0.7,
            (texts[20], base): 0.84,
            (texts[10], base): 0.86,
        }
    )
    result = select_and_concat(candidates, threshold=0.85, backend=backend)
    assert result.final_text == texts[50] + " " + texts[30] + " " + texts[20]
    annotated = {c.text: c.similarity_to_longest for c in result.candidates}
    assert annotated[texts[40]] == 0.9
    assert annotated[texts[20]] == 0.84


def test_single_candidate_unchanged():
    (result,) = [select_and_concat([make_candidate("only one here", "raw")])]
    assert result.final_text == "only one here"


def test_zero_threshold_keeps_only_longest():
    candidates = [
        make_candidate("the longest candidate text", "raw"),
        make_candidate("shorter text", "raw"),
    ]
    result = select_and_concat(candidates, threshold=0.0)
    assert result.final_text == "the longest candidate text"


def test_empty_candidates_rejected():
    with pytest.raises(EmptyCandidateSet):
        select_and_concat([])


def test_caption_cap_stops_at_candidate_boundary():
    base = "b " * 120  # 240 chars
    extra1 = "completely different words here indeed " * 4  # ~160
    extra2 = "another unrelated phrase entirely"
    candidates = [
        make_candidate(base.strip(), "raw"),
        make_candidate(extra1.strip(), "raw"),
        make_candidate(extra2, "raw"),
    ]
    result = select_and_concat(candidates, threshold=0.99, caption_cap=300)
    # base (239) + extra1 (159) would exceed 300 -> truncation stops there.
    assert result.final_text == base.strip()


def test_rank_ties_broken_lexicographically():
    candidates = [make_candidate(t, "raw") for t in ["bbb", "aaa", "cc"]]
    ranked = rank_candidates(candidates)
    assert [c.text for c in ranked] == ["aaa", "bbb", "cc"]


@settings(max_examples=150, deadline=None)
@given(
    st.lists(
        st.text(st.characters(whitelist_categories=("L", "Zs")), min_size=1, max_size=40).map(
            lambda s: " ".join(s.split())
        ).filter(bool),
        min_size=1,
        max_size=8,
        unique=True,
    )
)
def test_selection_invariants(texts):
    candidates = [make_candidate(t, "captioner_sample") for t in texts]
    result = select_and_concat(candidates)
    longest = rank_candidates(candidates)[0].text
    assert result.final_text.startswith(longest)
    backend = OfflineTfCosineBackend()
    for candidate in result.candidates[1:]:
        appended = (" " + candidate.text) in result.final_text[len(longest) :] or (
            result.final_text == longest + " " + candidate.text
        )
        recomputed = backend.score(candidate.text, longest)
        assert candidate.similarity_to_longest == recomputed
        if appended:
            assert recomputed < 0.85 or candidate.text in longest
    # determinism
    assert select_and_concat(candidates).final_text == result.final_text
