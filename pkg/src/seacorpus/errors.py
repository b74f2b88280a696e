"""Exception types shared across the pipeline."""

from __future__ import annotations


class CurationError(Exception):
    """Base class for all pipeline errors."""


# --- ingest ---------------------------------------------------------------


class MalformedTimestamp(CurationError):
    def __init__(self, line_no: int, line: str):
        super().__init__(f"line {line_no}: malformed timestamp: {line!r}")
        self.line_no = line_no
        self.line = line


class HostDisallowed(CurationError):
    pass


class FetchTimeout(CurationError):
    pass


class HttpStatusError(CurationError):
    def __init__(self, code: int, uri: str):
        super().__init__(f"HTTP {code} for {uri}")
        self.code = code
        self.uri = uri


class ManifestUnreadable(CurationError):
    pass


class UndecodableImage(CurationError):
    pass


# --- knowledge ------------------------------------------------------------


class SchemaUnreadable(CurationError):
    pass


class DuplicateAttributePath(CurationError):
    pass


class SchemaNotLoaded(CurationError):
    pass


class NoFactsForTaxon(CurationError):
    pass


# --- caption --------------------------------------------------------------


class CaptionerUnavailable(CurationError):
    pass


class BackendUnavailable(CurationError):
    pass


class EmptyCandidateSet(CurationError):
    pass


# --- instruct -------------------------------------------------------------


class MissingSlot(CurationError):
    def __init__(self, name: str):
        super().__init__(f"missing slot: {name}")
        self.name = name


class LlmUnavailable(CurationError):
    pass


class ValidationExhausted(CurationError):
    """All generation attempts failed validation; carries the last sample for audit."""

    def __init__(self, sample):
        super().__init__("all generation attempts failed validation")
        self.sample = sample


# --- assembly -------------------------------------------------------------


class BadRatios(CurationError):
    pass


class UnresolvedReviewItems(CurationError):
    def __init__(self, record_ids):
        ids = sorted(record_ids)
        super().__init__(f"{len(ids)} record(s) have pending review items: {ids[:5]}")
        self.record_ids = ids


# --- service --------------------------------------------------------------


class InvalidParams(CurationError):
    pass


class UnknownRecord(CurationError):
    pass


class UnknownReviewItem(CurationError):
    pass


class UnknownJob(CurationError):
    pass


class AlreadyDecided(CurationError):
    pass


class MissingEditedText(CurationError):
    pass
