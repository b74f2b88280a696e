"""Orchestration, persistence, HTTP API, and the human review queue."""

from .http import ApiServer
from .jobs import JOB_KINDS, Pipeline
from .review import audit_fraction, route_for_review
from .store import CorpusStore, Job, ReviewDecision, ReviewItem, job_fingerprint

__all__ = [
    "JOB_KINDS",
    "ApiServer",
    "CorpusStore",
    "Job",
    "Pipeline",
    "ReviewDecision",
    "ReviewItem",
    "audit_fraction",
    "job_fingerprint",
    "route_for_review",
]
