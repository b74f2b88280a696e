"""Command-line interface mirroring the HTTP job API.

Exit codes: 0 on success, 1 when a job fails, 2 on invalid arguments.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import load_config
from .service.http import ApiServer
from .service.jobs import Pipeline
from .service.store import CorpusStore


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seacorpus", description=__doc__)
    parser.add_argument("--config", metavar="FILE", help="pipeline config file (INI)")
    parser.add_argument("--store", metavar="DIR", default="./store", help="corpus store directory")
    parser.add_argument("--seed", type=int, default=0, help="seed for sampling and splits")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="ingest dumps, web pages, or videos")
    ingest.add_argument("--dump", action="append", default=[], metavar="FILE")
    ingest.add_argument("--html", action="append", default=[], metavar="FILE")
    ingest.add_argument("--base-uri", default="", help="base URI for --html image resolution")
    ingest.add_argument("--video-uri", metavar="URI")
    ingest.add_argument("--duration", type=float, help="video duration in seconds")
    ingest.add_argument("--subtitles", metavar="FILE", help="SRT/VTT track for the video")
    ingest.add_argument("--category", help="category annotation for video frames")

    expand = sub.add_parser("expand", help="expand captions from attribute facts")
    expand.add_argument("--facts", required=True, metavar="FILE")
    expand.add_argument("--taxa", metavar="FILE")
    expand.add_argument("--schema", metavar="FILE")
    expand.add_argument("--k", type=int, help="facts per expansion")

    diversify = sub.add_parser("diversify", help="caption candidates + selection")
    diversify.add_argument("--n", type=int, help="candidates per record")

    instruct = sub.add_parser("instruct", help="generate instruction samples")
    instruct.add_argument("--templates", metavar="FILE")
    instruct.add_argument("--per-record", type=int, default=1)
    instruct.add_argument("--generator", choices=["llm", "template_fact"])
    instruct.add_argument("--template-ids", help="comma-separated template ids")
    instruct.add_argument("--facts", metavar="FILE")
    instruct.add_argument("--taxa", metavar="FILE")
    instruct.add_argument("--schema", metavar="FILE")

    dedup = sub.add_parser("dedup", help="near-duplicate image clustering")
    dedup.add_argument("--max-hamming", type=int)

    assemble = sub.add_parser("assemble", help="build stage manifests and shards")
    assemble.add_argument("--stage", required=True, choices=["pretrain", "finetune"])
    assemble.add_argument("--exclude-pending", action="store_true")
    assemble.add_argument("--out", metavar="DIR")
    assemble.add_argument("--shard-size", type=int)

    serve = sub.add_parser("serve", help="run the HTTP API")
    serve.add_argument("--port", type=int, default=8765)
    serve.add_argument("--host", default="127.0.0.1")

    sub.add_parser("stats", help="print corpus statistics")
    return parser


def _drop_missing(params: dict) -> dict:
    return {k: v for k, v in params.items() if v not in (None, "", [])}


def _run_jobs(pipeline: Pipeline, jobs: list[tuple[str, dict]]) -> int:
    status = 0
    for kind, params in jobs:
        job = pipeline.run_job(kind, params)
        line = f"{job.kind}: {job.state} ({job.done}/{job.total})"
        if job.error:
            line += f" error={job.error}"
            status = 1
        print(line)
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    config = load_config(args.config)
    store = CorpusStore(Path(args.store))
    pipeline = Pipeline(store=store, config=config, seed=args.seed)

    if args.command == "ingest":
        jobs: list[tuple[str, dict]] = []
        jobs.extend(("ingest", {"dump": dump}) for dump in args.dump)
        jobs.extend(
            ("ingest", _drop_missing({"html": page, "base_uri": args.base_uri}))
            for page in args.html
        )
        if args.video_uri:
            if not args.duration:
                print("ingest: --video-uri requires --duration", file=sys.stderr)
                return 2
            video = _drop_missing(
                {
                    "uri": args.video_uri,
                    "duration": args.duration,
                    "subtitles": args.subtitles,
                    "category": args.category,
                }
            )
            jobs.append(("ingest", {"video": video}))
        if not jobs:
            print("ingest: nothing to ingest", file=sys.stderr)
            return 2
        return _run_jobs(pipeline, jobs)

    if args.command == "expand":
        params = _drop_missing(
            {"facts": args.facts, "taxa": args.taxa, "schema": args.schema, "k": args.k}
        )
        return _run_jobs(pipeline, [("expand", params)])

    if args.command == "diversify":
        return _run_jobs(pipeline, [("diversify", _drop_missing({"n": args.n}))])

    if args.command == "instruct":
        template_ids = None
        if args.template_ids:
            template_ids = [int(t) for t in args.template_ids.split(",") if t.strip()]
        params = _drop_missing(
            {
                "templates": args.templates,
                "per_record": args.per_record,
                "generator": args.generator,
                "template_ids": template_ids,
                "facts": args.facts,
                "taxa": args.taxa,
                "schema": args.schema,
            }
        )
        return _run_jobs(pipeline, [("instruct", params)])

    if args.command == "dedup":
        return _run_jobs(pipeline, [("dedup", _drop_missing({"max_hamming": args.max_hamming}))])

    if args.command == "assemble":
        params = _drop_missing(
            {
                "stage": args.stage,
                "exclude_pending": args.exclude_pending or None,
                "out": args.out,
                "shard_size": args.shard_size,
            }
        )
        return _run_jobs(pipeline, [("assemble", params)])

    if args.command == "stats":
        stats = pipeline.current_stats()
        payload = {
            "pair_count": stats.pair_count,
            "distinct_concepts": stats.distinct_concepts,
            "per_source": stats.per_source,
            "instruction_sample_count": stats.instruction_sample_count,
            "review": store.review_counts(),
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
        return 0

    if args.command == "serve":
        ApiServer(pipeline).serve_forever(args.host, args.port)
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
