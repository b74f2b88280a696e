"""seacorpus: a marine image-text corpus curation pipeline.

Builds two-stage training manifests from heterogeneous media sources:
ingestion, knowledge-grounded caption expansion, captioner-backed
diversification, instruction sample synthesis, deduplication and
filtering, human review, and deterministic assembly.
"""

__version__ = "0.1.0"
