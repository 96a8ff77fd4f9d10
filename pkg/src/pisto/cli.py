"""Command-line entry point: ``pisto-bench run|gen-scenes|summarize``."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import bench


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pisto-bench",
        description="Trajectory-optimization benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark config")
    run.add_argument("--config", required=True, help="JSON experiment config")
    run.add_argument("--method", help="override the config's method list")
    run.add_argument("--seed", type=int, help="override the config's seed list")
    run.add_argument("--out", help="override the output CSV path")

    gen = sub.add_parser("gen-scenes", help="generate random planar scenes")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--count", type=int, required=True)
    gen.add_argument("--difficulty", type=int, required=True)
    gen.add_argument("--out", required=True, help="output directory")

    summ = sub.add_parser("summarize", help="aggregate a results CSV")
    summ.add_argument("--in", dest="in_path", required=True, help="results CSV")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = bench.load_config(args.config)
            if args.method:
                cfg = replace(cfg, methods=(args.method,))
            if args.seed is not None:
                cfg = replace(cfg, seeds=(args.seed,))
            if args.out:
                cfg = replace(cfg, out=args.out)
            bench.run_experiment(cfg, echo=print)
            return 0
        if args.command == "gen-scenes":
            paths = bench.generate_scenes(args.seed, args.count, args.difficulty, args.out)
            print(f"wrote {len(paths)} scenes to {args.out}")
            return 0
        bench.summarize(args.in_path)
        return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
