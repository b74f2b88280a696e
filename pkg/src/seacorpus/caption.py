"""Caption construction: attribute-based expansion and candidate selection.

Expansion turns a bare category annotation into a long caption by rendering
knowledge-store facts; diversification asks a captioner for stochastic
candidates, ranks them by length, and appends the ones sufficiently
dissimilar from the longest (similarity below the 0.85 default cutoff).
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Optional, Protocol, Sequence

from .errors import CaptionerUnavailable, EmptyCandidateSet, NoFactsForTaxon
from .knowledge import AttributeFact, KnowledgeStore

DEFAULT_SIMILARITY_THRESHOLD = 0.85
DEFAULT_CAPTION_CAP = 512
DEFAULT_CANDIDATE_COUNT = 5

_TOKEN_RE = re.compile(r"\w+")


@dataclass(frozen=True)
class CaptionCandidate:
    text: str
    length: int
    origin: str  # template_expansion | captioner_sample | subtitle | raw
    similarity_to_longest: Optional[float] = None


def make_candidate(text: str, origin: str) -> CaptionCandidate:
    return CaptionCandidate(text=text, length=len(text), origin=origin)


@dataclass
class CaptionBundle:
    record_id: str
    candidates: list[CaptionCandidate] = field(default_factory=list)
    final_text: Optional[str] = None
    provenance: list[str] = field(default_factory=list)

    def add_step(self, tag: str):
        self.provenance.append(tag)


@dataclass
class SamplerState:
    """Per-taxon cursor so images sharing a category get different facts."""

    taxon_id: str
    cursor: int = 0


@dataclass(frozen=True)
class ExpansionResult:
    text: str
    used_facts: tuple[AttributeFact, ...]


def _identification_sentence(store: KnowledgeStore, taxon_id: str) -> str:
    taxon = store.taxon(taxon_id)
    if taxon is None:
        return f"This is {taxon_id}."
    common = taxon.common_names[0] if taxon.common_names else None
    scientific = taxon.scientific_name
    if common and scientific:
        return f"This is {common} ({scientific})."
    return f"This is {common or scientific}."


def _as_sentence(text: str) -> str:
    text = text.strip()
    return text if text.endswith((".", "!", "?")) else text + "."


def expand_from_attributes(
    store: KnowledgeStore, taxon_id: str, k: int, state: SamplerState
) -> ExpansionResult:
    """Build an expanded caption from up to `k` facts about the taxon.

    Facts are picked round-robin from the deterministic fact ordering,
    starting at offset cursor*k mod fact count, so consecutive expansions
    for the same taxon use different fact subsets whenever possible. The
    state cursor advances by one per call.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    facts = store.ordered_facts(taxon_id)
    if not facts:
        raise NoFactsForTaxon(taxon_id)
    n = len(facts)
    start = (state.cursor * k) % n
    used = tuple(facts[(start + i) % n] for i in range(min(k, n)))
    state.cursor += 1
    sentences = [_identification_sentence(store, taxon_id)]
    sentences.extend(_as_sentence(fact.text) for fact in used)
    return ExpansionResult(text=" ".join(sentences), used_facts=used)


# --- candidate acquisition --------------------------------------------------


class CaptionerClient(Protocol):
    def sample(self, record_id: str, n: int) -> list[str]:
        """Return up to n stochastic caption samples for the record."""
        ...


def request_candidates(
    client: CaptionerClient,
    record_id: str,
    n: int = DEFAULT_CANDIDATE_COUNT,
    *,
    attempts: int = 3,
) -> list[CaptionCandidate]:
    """Fetch diversified captions from the captioner, collapsing exact
    duplicates. Raises CaptionerUnavailable once retries are exhausted."""
    if n < 1:
        raise ValueError("n must be >= 1")
    last_error: Exception | None = None
    for _ in range(attempts):
        try:
            texts = client.sample(record_id, n)
            break
        except CaptionerUnavailable as exc:
            last_error = exc
    else:
        raise CaptionerUnavailable(str(last_error))
    seen = set()
    candidates = []
    for text in texts[:n]:
        text = text.strip()
        if not text or text in seen:
            continue
        seen.add(text)
        candidates.append(make_candidate(text, "captioner_sample"))
    return candidates


# --- similarity --------------------------------------------------------------


class SimilarityBackend(Protocol):
    def score(self, a: str, b: str) -> float: ...


def tf_cosine(a: str, b: str) -> float:
    """Cosine over term-frequency vectors of lowercased word tokens.

    Empty token vectors score 0.0 by convention.
    """
    ca = Counter(_TOKEN_RE.findall(a.lower()))
    cb = Counter(_TOKEN_RE.findall(b.lower()))
    if not ca or not cb:
        return 0.0
    dot = sum(ca[token] * cb[token] for token in sorted(ca.keys() & cb.keys()))
    norm_sq = sum(v * v for v in ca.values()) * sum(v * v for v in cb.values())
    return dot / math.sqrt(norm_sq)


class OfflineTfCosineBackend:
    """Default offline backend; keeps the pipeline testable with no services."""

    def score(self, a: str, b: str) -> float:
        return tf_cosine(a, b)


def similarity(a: str, b: str, backend: Optional[SimilarityBackend] = None) -> float:
    backend = backend or OfflineTfCosineBackend()
    return backend.score(a, b)


# --- selection ---------------------------------------------------------------


@dataclass(frozen=True)
class SelectionResult:
    final_text: str
    candidates: tuple[CaptionCandidate, ...]  # annotated, in ranked order
    max_similarity_to_longest: Optional[float]  # over non-base candidates


def rank_candidates(candidates: Sequence[CaptionCandidate]) -> list[CaptionCandidate]:
    """Length-descending order; ties broken lexicographically by text."""
    return sorted(candidates, key=lambda c: (-c.length, c.text))


def select_and_concat(
    candidates: Sequence[CaptionCandidate],
    threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
    backend: Optional[SimilarityBackend] = None,
    *,
    caption_cap: int = DEFAULT_CAPTION_CAP,
    pairwise: bool = False,
) -> SelectionResult:
    """Rank candidates by length and concatenate the dissimilar ones.

    The longest candidate is the base and is always kept whole. Remaining
    candidates are appended in ranked order when their similarity to the
    base is strictly below the threshold; appending stops at the first
    candidate that would push the caption past `caption_cap`, so the result
    is always cut at a whole-candidate boundary. With `pairwise`, appended
    candidates must also be dissimilar to everything appended before them.
    """
    if not candidates:
        raise EmptyCandidateSet("select_and_concat needs at least one candidate")
    backend = backend or OfflineTfCosineBackend()
    ranked = rank_candidates(candidates)
    base = replace(ranked[0], similarity_to_longest=1.0)
    annotated = [base]
    appendable: list[CaptionCandidate] = []
    for candidate in ranked[1:]:
        score = backend.score(candidate.text, base.text)
        scored = replace(candidate, similarity_to_longest=score)
        annotated.append(scored)
        if score < threshold:
            appendable.append(scored)

    parts = [base.text]
    total = base.length
    accepted_texts: list[str] = []
    for candidate in appendable:
        if pairwise and any(
            backend.score(candidate.text, prev) >= threshold for prev in accepted_texts
        ):
            continue
        if total + 1 + candidate.length > caption_cap:
            break
        parts.append(candidate.text)
        accepted_texts.append(candidate.text)
        total += 1 + candidate.length

    scores = [c.similarity_to_longest for c in annotated[1:]]
    return SelectionResult(
        final_text=" ".join(parts),
        candidates=tuple(annotated),
        max_similarity_to_longest=max(scores) if scores else None,  # type: ignore[type-var]
    )
