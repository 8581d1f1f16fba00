"""Command-line entry point: one subcommand per pipeline stage."""

from __future__ import annotations

import argparse
import sys

from .config import RunConfig
from .errors import IrisError
from .pipeline import STAGE_ORDER, end_to_end, run_stage, run_sweep


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iris",
        description="Rationale-based zero-shot stance detection pipeline",
    )
    sub = parser.add_subparsers(dest="stage", required=True)
    for stage in STAGE_ORDER + ["sweep", "end-to-end"]:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        p.add_argument("--config", required=True, help="YAML run config")
        p.add_argument("--seed", type=int, default=None,
                       help="override run.seed")
        p.add_argument("--train-fraction", type=float, default=None,
                       help="override run.train_fraction")
        p.add_argument("--vote-mode", default=None,
                       choices=["relevant-explicit", "all-explicit"],
                       help="override train.vote_mode")
        p.add_argument("--scorer", default=None,
                       choices=["reranker", "bm25", "cosine", "llm-rank",
                                "llm-scores"],
                       help="override rank.scorer")
        if stage == "sweep":
            p.add_argument("--param", default=None, choices=["k", "beta"],
                           help="override sweep.parameter")
            p.add_argument("--values", default=None,
                           help="override sweep.values (comma separated)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config).with_overrides(
            seed=args.seed,
            train_fraction=args.train_fraction,
            vote_mode=args.vote_mode,
            scorer=args.scorer,
        )
        if args.stage == "sweep":
            if getattr(args, "param", None):
                cfg.sweep.parameter = args.param
            if getattr(args, "values", None):
                cfg.sweep.values = [float(v) for v in args.values.split(",")]
            if not cfg.sweep.parameter or not cfg.sweep.values:
                raise IrisError(
                    "sweep needs sweep.parameter and sweep.values (config) "
                    "or --param/--values")
            path = run_sweep(cfg)
            print(f"sweep table written to {path}")
        elif args.stage == "end-to-end":
            reports = end_to_end(cfg)
            for report in reports:
                print(f"seed {report.run_seed}: macro-F1 "
                      f"{report.macro_f1:.4f} over {report.n} samples")
        else:
            run_stage(args.stage, cfg)
            print(f"stage {args.stage} completed under {cfg.run.out_dir}")
        return 0
    except IrisError as e:
        print(f"error [{args.stage}]: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
