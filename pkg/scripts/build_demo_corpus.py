#!/usr/bin/env python3
"""Generate the synthetic demo corpus (dump, web page, subtitles, knowledge
base) into a directory, ready for `seacorpus ingest`."""

import argparse
from pathlib import Path

from seacorpus.synth import build_demo_corpus


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", type=Path, help="output directory")
    parser.add_argument("--dump-lines", type=int, default=125)
    args = parser.parse_args()

    corpus = build_demo_corpus(args.out, dump_lines=args.dump_lines)
    print(f"corpus written to {corpus.root}")
    print(f"  dump:      {corpus.dump}")
    print(f"  web page:  {corpus.html}")
    print(f"  subtitles: {corpus.subtitles}")
    print(f"  facts:     {corpus.facts}")
    print(f"  taxa:      {corpus.taxa}")
    print(f"  expected records after full ingest: {corpus.expected_records}")
    print("videos (synthetic frames, pass to `seacorpus ingest`):")
    print(f"  plain:     --video-uri {corpus.video_plain['uri']} --duration {corpus.video_plain['duration']:g}")
    print(
        f"  subtitled: --video-uri {corpus.video_subtitled['uri']} "
        f"--duration {corpus.video_subtitled['duration']:g} --subtitles {corpus.subtitles}"
    )


if __name__ == "__main__":
    main()
