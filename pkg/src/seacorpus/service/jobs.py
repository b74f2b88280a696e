"""Pipeline job orchestration over the corpus store.

Jobs are idempotent per (kind, params) fingerprint: resubmitting a
completed identical job returns the completed job instead of re-running.
Each kind maps onto one module pipeline; everything iterates records in
sorted order so reruns are deterministic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional
from urllib.parse import urlparse

from .. import assembly
from ..caption import (
    CaptionBundle,
    SamplerState,
    expand_from_attributes,
    make_candidate,
    request_candidates,
    select_and_concat,
)
from ..clients import make_captioner, make_embedder, make_llm
from ..config import PipelineConfig
from ..errors import CurationError, InvalidParams, NoFactsForTaxon, ValidationExhausted
from ..ingest.fetch import Fetcher
from ..ingest.frames import make_frame_extractor
from ..ingest.records import (
    MediaRecord,
    RawPair,
    Source,
    decode_image,
    import_records,
    pixel_hash,
)
from ..ingest.subtitles import parse_subtitles
from ..ingest.keyframes import plan_keyframes
from ..ingest.web import extract_web_pairs
from ..instruct import (
    InstructionTemplate,
    generate_qa,
    generate_template_sample,
    load_default_instructions,
    load_templates,
    rules_for_record,
)
from ..knowledge import (
    KnowledgeStore,
    load_default_schema,
    load_attribute_schema,
    load_facts_file,
    load_taxa_file,
    normalize_taxon_id,
)
from ..quality import apply_filters, cluster_near_duplicates, dhash
from .review import route_for_review
from .store import CorpusStore, Job, job_fingerprint

logger = logging.getLogger(__name__)

JOB_KINDS = ("ingest", "expand", "diversify", "instruct", "dedup", "assemble")


@dataclass
class Pipeline:
    store: CorpusStore
    config: PipelineConfig = field(default_factory=PipelineConfig)
    seed: int = 0

    def __post_init__(self):
        self._fetcher = Fetcher(config=self.config.politeness)
        self._knowledge: Optional[KnowledgeStore] = None
        self._knowledge_key: Optional[str] = None

    # --- job driver --------------------------------------------------------

    def run_job(self, kind: str, params: dict) -> Job:
        if kind not in JOB_KINDS:
            raise InvalidParams(f"unknown job kind: {kind!r}")
        job_id = job_fingerprint(kind, params)
        existing = self.store.job(job_id)
        if existing is not None and existing.state == "done":
            return existing
        job = Job(job_id=job_id, kind=kind, params=params, state="running")
        self.store.upsert_job(job)
        runner: Callable[[Job, dict], None] = getattr(self, f"_run_{kind}")
        try:
            runner(job, params)
            job.state = "done"
        except CurationError as exc:
            job.state = "failed"
            job.error = f"{type(exc).__name__}: {exc}"
            logger.warning("job %s (%s) failed: %s", job.job_id, kind, job.error)
        self.store.upsert_job(job)
        return job

    def _progress(self, job: Job, done: int, total: int, *, flush_every: int = 50):
        job.done, job.total = done, total
        if done == total or done % flush_every == 0:
            self.store.upsert_job(job)

    # --- ingest --------------------------------------------------------------

    def _run_ingest(self, job: Job, params: dict):
        if "dump" in params:
            self._ingest_dump(job, Path(params["dump"]))
        elif "html" in params:
            self._ingest_html(job, Path(params["html"]), params.get("base_uri", ""))
        elif "video" in params:
            self._ingest_video(job, params["video"])
        else:
            raise InvalidParams("ingest params need one of: dump, html, video")

    def _ingest_dump(self, job: Job, dump: Path):
        result = import_records(dump)
        total = len(result.records)
        for done, record in enumerate(sorted(result.records, key=lambda r: r.record_id), start=1):
            self.store.add_record(record, result.images[record.record_id])
            if record.raw_text:
                self._seed_bundle(record, record.raw_text, "raw")
            self._progress(job, done, total)
        for skip in result.skipped:
            logger.warning("%s line %d skipped: %s", dump, skip.line_no, skip.reason)
        job.total = total

    def _ingest_html(self, job: Job, page: Path, base_uri: str):
        candidates = extract_web_pairs(page.read_bytes(), base_uri or page.as_uri())
        total = len(candidates)
        for done, candidate in enumerate(candidates, start=1):
            try:
                image = self._load_image_uri(candidate.image_uri)
            except CurationError as exc:
                logger.warning("skipping %s: %s", candidate.image_uri, exc)
                continue
            record = MediaRecord(
                record_id=pixel_hash(image),
                source=Source.WEB,
                origin_uri=candidate.image_uri,
                raw_text=candidate.text,
            )
            pair = RawPair(record=record, text=candidate.text, extraction_rule=candidate.extraction_rule)
            self.store.add_record(record, image)
            bundle = self._seed_bundle(record, pair.text, "raw")
            bundle.add_step(f"web:{pair.extraction_rule}")
            self.store.upsert_bundle(bundle)
            self._progress(job, done, total)

    def _ingest_video(self, job: Job, video: dict):
        uri = video.get("uri")
        duration = video.get("duration")
        if not uri or not duration:
            raise InvalidParams("video params need uri and duration")
        cues = None
        if video.get("subtitles"):
            subtitle_path = Path(video["subtitles"])
            fmt = video.get("format") or subtitle_path.suffix.lstrip(".").lower()
            cues = parse_subtitles(subtitle_path.read_bytes(), fmt)
        plan = plan_keyframes(float(duration), cues)
        extractor = make_frame_extractor(self.config.clients.frame_extractor, seed=self.seed)
        source = Source.VIDEO_SUBTITLED if cues else Source.VIDEO_PLAIN
        total = len(plan)
        for done, spec in enumerate(plan, start=1):
            image = extractor.extract(uri, spec.timestamp)
            record = MediaRecord(
                record_id=pixel_hash(image),
                source=source,
                origin_uri=f"{uri}#t={spec.timestamp:g}",
                category_annotation=video.get("category"),
                raw_text=spec.expected_text,
            )
            self.store.add_record(record, image)
            if spec.expected_text:
                self._seed_bundle(record, spec.expected_text, "subtitle")
            self._progress(job, done, total)

    def _seed_bundle(self, record: MediaRecord, text: str, origin: str) -> CaptionBundle:
        bundle = self.store.bundle(record.record_id) or CaptionBundle(record_id=record.record_id)
        if all(c.text != text for c in bundle.candidates):
            bundle.candidates.append(make_candidate(text, origin))
            bundle.add_step(f"ingested:{origin}")
        self.store.upsert_bundle(bundle)
        return bundle

    def _load_image_uri(self, uri: str):
        parsed = urlparse(uri)
        if parsed.scheme in ("http", "https"):
            body, _ = self._fetcher.fetch(uri)
            return decode_image(body)
        if parsed.scheme == "file":
            return decode_image(Path(parsed.path))
        return decode_image(Path(uri))

    # --- knowledge -----------------------------------------------------------

    def knowledge(self, params: Optional[dict] = None) -> KnowledgeStore:
        """Load (and cache) the knowledge store for the given source files,
        falling back to the most recent expand job's files."""
        params = dict(params or {})
        if not params.get("facts"):
            for job in reversed(list(self.store.jobs.values())):
                if job.kind == "expand" and job.params.get("facts"):
                    params = {**job.params, **{k: v for k, v in params.items() if v}}
                    break
        key = f"{params.get('schema')}|{params.get('facts')}|{params.get('taxa')}"
        if self._knowledge is not None and key == self._knowledge_key:
            return self._knowledge
        schema_file = params.get("schema") or self.config.schema_file
        schema = load_attribute_schema(schema_file) if schema_file else load_default_schema()
        store = KnowledgeStore(schema)
        if params.get("taxa"):
            for taxon in load_taxa_file(params["taxa"]):
                store.add_taxon(taxon)
        if params.get("facts"):
            report = store.import_facts(load_facts_file(params["facts"], schema))
            if report.rejected:
                for fact, reason in report.rejected:
                    logger.warning("fact rejected (%s): %s", reason, fact)
        self._knowledge = store
        self._knowledge_key = key
        return store

    # --- expand ----------------------------------------------------------------

    def _run_expand(self, job: Job, params: dict):
        knowledge = self.knowledge(params)
        k = int(params.get("k") or self.config.thresholds.facts_per_expansion)
        annotated = [
            r
            for r in sorted(self.store.records.values(), key=lambda r: r.record_id)
            if r.category_annotation
        ]
        states: dict[str, SamplerState] = {}
        total = len(annotated)
        for done, record in enumerate(annotated, start=1):
            taxon_id = normalize_taxon_id(record.category_annotation or "")
            state = states.setdefault(taxon_id, SamplerState(taxon_id))
            try:
                expansion = expand_from_attributes(knowledge, taxon_id, k, state)
            except NoFactsForTaxon:
                self._progress(job, done, total)
                continue
            bundle = self.store.bundle(record.record_id) or CaptionBundle(record_id=record.record_id)
            if all(c.text != expansion.text for c in bundle.candidates):
                bundle.candidates.append(make_candidate(expansion.text, "template_expansion"))
                bundle.add_step("expanded")
            self.store.upsert_bundle(bundle)
            self._progress(job, done, total)

    # --- diversify ----------------------------------------------------------------

    def _run_diversify(self, job: Job, params: dict):
        captioner = make_captioner(params.get("captioner") or self.config.clients.captioner)
        backend = make_embedder(params.get("embedder") or self.config.clients.embedder)
        n = int(params.get("n") or self.config.thresholds.candidates)
        records = sorted(self.store.records.values(), key=lambda r: r.record_id)
        total = len(records)
        for done, record in enumerate(records, start=1):
            bundle = self.store.bundle(record.record_id) or CaptionBundle(record_id=record.record_id)
            sampled = request_candidates(captioner, record.record_id, n)
            existing = {c.text for c in bundle.candidates}
            for candidate in sampled:
                if candidate.text not in existing:
                    bundle.candidates.append(candidate)
                    existing.add(candidate.text)
            if sampled:
                bundle.add_step("diversified")
            if not bundle.candidates:
                self.store.upsert_bundle(bundle)
                self._progress(job, done, total)
                continue
            selection = select_and_concat(
                bundle.candidates,
                threshold=self.config.thresholds.similarity,
                backend=backend,
                caption_cap=self.config.thresholds.caption_cap,
            )
            bundle.candidates = list(selection.candidates)
            bundle.final_text = selection.final_text
            bundle.add_step("selected")
            self.store.upsert_bundle(bundle)
            reason = route_for_review(
                record, selection.max_similarity_to_longest, self.config.review, self.seed
            )
            if reason:
                self.store.enqueue_review(record.record_id, selection.final_text, reason)
            self._progress(job, done, total)

    # --- instruct -----------------------------------------------------------------

    def _instruction_templates(self, params: dict) -> list[InstructionTemplate]:
        path = params.get("templates") or self.config.instructions_file
        return load_templates(path) if path else load_default_instructions()

    def _run_instruct(self, job: Job, params: dict):
        knowledge = self.knowledge(params)
        templates = self._instruction_templates(params)
        by_id = {t.template_id: t for t in templates}
        # Only category-slot templates can be grounded per record.
        assignable = sorted(t.template_id for t in templates if "category" in t.slots)
        wanted_ids = params.get("template_ids")
        per_record = int(params.get("per_record") or 1)
        generator = params.get("generator") or (
            "llm" if self.config.clients.llm else "template_fact"
        )
        llm = make_llm(self.config.clients.llm) if generator == "llm" else None

        annotated = [
            r
            for r in sorted(self.store.records.values(), key=lambda r: r.record_id)
            if r.category_annotation
        ]
        total = len(annotated)
        for done, record in enumerate(annotated, start=1):
            taxon_id = normalize_taxon_id(record.category_annotation or "")
            context = knowledge.lookup_facts(taxon_id)
            ids = wanted_ids or self._assign_template_ids(record.record_id, assignable, per_record)
            for template_id in ids:
                template = by_id.get(int(template_id))
                if template is None or "category" not in template.slots:
                    continue
                rules = rules_for_record(knowledge, record, template)
                try:
                    if generator == "llm":
                        sample = generate_qa(record, template, llm, context, rules)
                    else:
                        sample = generate_template_sample(record, template, context, rules)
                except ValidationExhausted as exc:
                    sample = exc.sample  # stored as failed, for audit
                self.store.add_sample(sample)
            self._progress(job, done, total)

    def _assign_template_ids(self, record_id: str, available: list[int], count: int) -> list[int]:
        if not available:
            return []
        start = int(record_id[:8], 16) % len(available)
        return [available[(start + i) % len(available)] for i in range(min(count, len(available)))]

    # --- dedup ---------------------------------------------------------------------

    def _run_dedup(self, job: Job, params: dict):
        max_hamming = int(
            params.get("max_hamming", self.config.thresholds.max_hamming)
        )
        hashes = {}
        ids = sorted(self.store.image_meta)
        total = len(ids)
        for done, record_id in enumerate(ids, start=1):
            path = self.store.image_path(record_id)
            hashes[record_id] = dhash(decode_image(path))
            self._progress(job, done, total)
        report = cluster_near_duplicates(hashes, max_hamming=max_hamming)
        self.store.set_dedup(report.dropped_ids, report.to_lines(hashes))

    # --- assemble ------------------------------------------------------------------

    def caption_entries(self, stage: str) -> list[assembly.ManifestEntry]:
        entries = []
        for record_id in sorted(self.store.records):
            if record_id in self.store.dedup_dropped:
                continue
            record = self.store.records[record_id]
            bundle = self.store.bundle(record_id)
            if bundle is None or not bundle.final_text:
                continue
            verdict = apply_filters(
                bundle.final_text, stage, self.store.image_size(record_id), self.config.filters
            )
            if not verdict.passed:
                continue
            meta = self.store.image_meta.get(record_id) or {}
            entries.append(
                assembly.ManifestEntry(
                    record_id=record_id,
                    image_path=meta.get("path", ""),
                    text=bundle.final_text,
                    provenance=tuple(bundle.provenance),
                    taxon_id=normalize_taxon_id(record.category_annotation or "") or "",
                    source=record.source.value,
                    kind="caption",
                )
            )
        return entries

    def instruction_entries(self) -> list[assembly.ManifestEntry]:
        entries = []
        for key in sorted(self.store.samples):
            sample = self.store.samples[key]
            if not sample.validation.passed:
                continue
            record = self.store.records.get(sample.record_id)
            if record is None or sample.record_id in self.store.dedup_dropped:
                continue
            verdict = apply_filters(
                sample.response,
                "finetune",
                self.store.image_size(sample.record_id),
                self.config.filters,
            )
            if not verdict.passed:
                continue
            meta = self.store.image_meta.get(sample.record_id) or {}
            entries.append(
                assembly.ManifestEntry(
                    record_id=sample.record_id,
                    image_path=meta.get("path", ""),
                    text=sample.instruction + "\n" + sample.response,
                    provenance=("instruct", f"template:{sample.template_id}", sample.generator),
                    taxon_id=normalize_taxon_id(record.category_annotation or "") or "",
                    source=record.source.value,
                    kind="instruction",
                    template_id=sample.template_id,
                )
            )
        return entries

    def _run_assemble(self, job: Job, params: dict):
        stage = params.get("stage")
        if stage not in assembly.STAGES:
            raise InvalidParams(f"stage must be one of {assembly.STAGES}, got {stage!r}")
        shard_size = int(params.get("shard_size") or assembly.DEFAULT_SHARD_SIZE)
        config = assembly.StageConfig.for_stage(stage, shard_size)
        entries = self.caption_entries(stage) if stage == "pretrain" else self.instruction_entries()
        review = {
            record_id: assembly.ReviewResolution(
                state=resolution["state"], edited_text=resolution.get("edited_text")
            )
            for record_id, resolution in self.store.review_resolutions().items()
        }
        manifest = assembly.build_manifest(
            config,
            entries,
            review,
            self.seed,
            exclude_pending=bool(params.get("exclude_pending")),
        )
        out_dir = Path(params.get("out") or self.store.root / "manifests")
        assembly.write_manifest(manifest, out_dir)
        job.done = job.total = len(manifest.entries)

    # --- stats -----------------------------------------------------------------------

    def current_stats(self) -> assembly.StatsReport:
        """Live corpus statistics over review-resolved caption pairs plus
        validation-passed instruction samples."""
        review = self.store.review_resolutions()
        entries = []
        for entry in self.caption_entries("pretrain") + self.instruction_entries():
            state = review.get(entry.record_id, {"state": "accepted"})["state"]
            if state in ("rejected", "pending"):
                continue
            entries.append(entry)
        return assembly.compute_stats(entries)

    def manifest_path(self, stage: str) -> Path:
        return self.store.root / "manifests" / f"manifest-{stage}.tsv"
