"""Command-line entry point.

Subcommands: build, train, eval, analyze. Exit codes: 0 on success, 2 on
validation errors (bad input files or configuration), 1 on runtime
failures.
"""

from __future__ import annotations

import argparse
import sys

from prereqgraph import pipeline
from prereqgraph.config import load_config
from prereqgraph.errors import ValidationError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prereqgraph",
        description="Prerequisite chain learning over a concept-resource graph",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="ingest corpus, build graph and features")
    p_build.add_argument("--config", required=True)

    p_train = sub.add_parser("train", help="train one run per configured seed")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--jobs", type=int, default=1,
                         help="seed-level parallelism (default 1)")

    p_eval = sub.add_parser("eval", help="aggregate metrics over run directories")
    p_eval.add_argument("--runs", nargs="+", required=True)
    p_eval.add_argument("--out", default=None)

    p_analyze = sub.add_parser("analyze", help="recovered concept-graph report")
    p_analyze.add_argument("--run", required=True)
    p_analyze.add_argument("--threshold", type=float, default=0.5)
    p_analyze.add_argument("--out", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "build":
            manifest = pipeline.cmd_build(load_config(args.config))
            print(
                "built graph: {num_concepts} concepts, {num_resources} resources, "
                "{num_annotations} annotations".format(**manifest)
            )
        elif args.command == "train":
            config = load_config(args.config)
            results = pipeline.cmd_train(config, jobs=args.jobs)
            for seed in sorted(results):
                metrics = " ".join(f"{k}={v:.4f}" for k, v in sorted(results[seed].items()))
                print(f"seed {seed}: {metrics}")
        elif args.command == "eval":
            print(pipeline.cmd_eval(args.runs, args.out), end="")
        elif args.command == "analyze":
            report = pipeline.cmd_analyze(args.run, args.threshold, args.out)
            if args.out is None:
                print(report, end="")
            else:
                print(report.splitlines()[0])
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
