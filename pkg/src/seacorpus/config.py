"""Pipeline configuration.

Plain-text key/value sections (INI syntax) drive client endpoints,
thresholds, fetch politeness, and review routing bands; every value has a
working default so an empty config is valid.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .caption import DEFAULT_CAPTION_CAP, DEFAULT_SIMILARITY_THRESHOLD
from .ingest.fetch import PolitenessConfig
from .quality import DEFAULT_MAX_HAMMING, FilterConfig


@dataclass(frozen=True)
class ClientConfig:
    captioner: str = "stub://0"
    embedder: str = "offline"
    llm: str = "stub://0"
    frame_extractor: str = "synthetic"  # or a command template with {src} {t} {out}


@dataclass(frozen=True)
class ThresholdConfig:
    similarity: float = DEFAULT_SIMILARITY_THRESHOLD
    max_hamming: int = DEFAULT_MAX_HAMMING
    caption_cap: int = DEFAULT_CAPTION_CAP
    candidates: int = 5
    facts_per_expansion: int = 3


@dataclass(frozen=True)
class ReviewConfig:
    band_low: float = 0.80
    band_high: float = 0.90
    audit_rate: float = 0.05


@dataclass(frozen=True)
class PipelineConfig:
    clients: ClientConfig = field(default_factory=ClientConfig)
    thresholds: ThresholdConfig = field(default_factory=ThresholdConfig)
    politeness: PolitenessConfig = field(default_factory=PolitenessConfig)
    review: ReviewConfig = field(default_factory=ReviewConfig)
    filters: FilterConfig = field(default_factory=FilterConfig)
    schema_file: Optional[str] = None  # None -> packaged default
    instructions_file: Optional[str] = None
    prompts_file: Optional[str] = None
    api_token: Optional[str] = None


def load_config(path: Optional[Union[str, Path]]) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)

    def get(section: str, option: str, fallback):
        if not parser.has_option(section, option):
            return fallback
        raw = parser.get(section, option)
        if isinstance(fallback, bool):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(fallback, int):
            return int(raw)
        if isinstance(fallback, float):
            return float(raw)
        return raw.strip()

    defaults = PipelineConfig()
    clients = ClientConfig(
        captioner=get("clients", "captioner", defaults.clients.captioner),
        embedder=get("clients", "embedder", defaults.clients.embedder),
        llm=get("clients", "llm", defaults.clients.llm),
        frame_extractor=get("clients", "frame_extractor", defaults.clients.frame_extractor),
    )
    thresholds = ThresholdConfig(
        similarity=get("thresholds", "similarity", defaults.thresholds.similarity),
        max_hamming=get("thresholds", "max_hamming", defaults.thresholds.max_hamming),
        caption_cap=get("thresholds", "caption_cap", defaults.thresholds.caption_cap),
        candidates=get("thresholds", "candidates", defaults.thresholds.candidates),
        facts_per_expansion=get(
            "thresholds", "facts_per_expansion", defaults.thresholds.facts_per_expansion
        ),
    )
    denied = get("politeness", "denied_hosts", "")
    politeness = PolitenessConfig(
        min_host_interval=get(
            "politeness", "min_host_interval", defaults.politeness.min_host_interval
        ),
        attempts=get("politeness", "attempts", defaults.politeness.attempts),
        backoff_base=get("politeness", "backoff_base", defaults.politeness.backoff_base),
        timeout=get("politeness", "timeout", defaults.politeness.timeout),
        denied_hosts=frozenset(h.strip() for h in denied.split(",") if h.strip()),
    )
    review = ReviewConfig(
        band_low=get("review", "band_low", defaults.review.band_low),
        band_high=get("review", "band_high", defaults.review.band_high),
        audit_rate=get("review", "audit_rate", defaults.review.audit_rate),
    )
    filters = FilterConfig(
        min_words_pretrain=get(
            "filters", "min_words_pretrain", defaults.filters.min_words_pretrain
        ),
        min_words_finetune=get(
            "filters", "min_words_finetune", defaults.filters.min_words_finetune
        ),
        min_image_dim=get("filters", "min_image_dim", defaults.filters.min_image_dim),
    )
    return PipelineConfig(
        clients=clients,
        thresholds=thresholds,
        politeness=politeness,
        review=review,
        filters=filters,
        schema_file=get("knowledge", "schema_file", "") or None,
        instructions_file=get("instruct", "instructions_file", "") or None,
        prompts_file=get("instruct", "prompts_file", "") or None,
        api_token=get("service", "api_token", "") or None,
    )
