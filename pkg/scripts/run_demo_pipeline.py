#!/usr/bin/env python3
"""End-to-end demo: build the synthetic corpus, run every pipeline stage,
auto-resolve the review queue, and assemble both training manifests.

Everything runs offline against the stub captioner/LLM clients and the
TF-cosine similarity backend.
"""

import argparse
import time
from pathlib import Path

from seacorpus.config import PipelineConfig
from seacorpus.service.jobs import Pipeline
from seacorpus.service.store import CorpusStore, ReviewDecision
from seacorpus.synth import build_demo_corpus


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("workdir", type=Path, help="directory for corpus + store")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    corpus = build_demo_corpus(args.workdir / "corpus")
    pipeline = Pipeline(
        store=CorpusStore(args.workdir / "store"), config=PipelineConfig(), seed=args.seed
    )

    started = time.monotonic()
    steps = [
        ("ingest", {"dump": str(corpus.dump)}),
        ("ingest", {"html": str(corpus.html), "base_uri": corpus.base_uri}),
        ("ingest", {"video": corpus.video_subtitled}),
        ("ingest", {"video": corpus.video_plain}),
        ("expand", {"facts": str(corpus.facts), "taxa": str(corpus.taxa)}),
        ("diversify", {}),
        ("instruct", {"per_record": 1, "generator": "llm"}),
        ("dedup", {}),
    ]
    for kind, params in steps:
        job = pipeline.run_job(kind, params)
        print(f"{kind:10s} {job.state:6s} {job.done}/{job.total}"
              + (f"  {job.error}" if job.error else ""))
        if job.state != "done":
            raise SystemExit(1)

    # Auto-accept the whole review queue (a real deployment would point the
    # review station at `seacorpus serve` instead).
    accepted = 0
    while True:
        item = pipeline.store.next_pending_review()
        if item is None:
            break
        pipeline.store.apply_decision(
            ReviewDecision(item_id=item.item_id, verdict="accept", reviewer="demo"),
            f"demo-{item.item_id}",
        )
        accepted += 1
    print(f"review     done   auto-accepted {accepted} items")

    for stage in ("pretrain", "finetune"):
        job = pipeline.run_job("assemble", {"stage": stage})
        print(f"assemble   {job.state:6s} stage={stage} entries={job.total}")
        if job.state != "done":
            raise SystemExit(1)

    stats = pipeline.current_stats()
    print(f"\nfinished in {time.monotonic() - started:.1f}s")
    print(f"pairs={stats.pair_count} concepts={stats.distinct_concepts} "
          f"instruction_samples={stats.instruction_sample_count}")
    print(f"per_source={stats.per_source}")
    print(f"manifests under {pipeline.store.root / 'manifests'}")


if __name__ == "__main__":
    main()
