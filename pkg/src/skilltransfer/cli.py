"""Command-line entry point: ``skilltransfer {synth,analyze,transfer,run}``."""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from . import pipeline, robot
from .clustering import ClusteringError
from .pipeline import EXIT_CONFIG, EXIT_OK, ConfigError, PipelineConfig

logger = logging.getLogger("skilltransfer")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("-v", "--verbose", action="count", default=0, help="more logging")

    analysis = argparse.ArgumentParser(add_help=False)
    analysis.add_argument("--input", metavar="PATH", help="trial CSV (default: <out>/trials.csv)")
    analysis.add_argument("--k", type=int, help="number of clusters")
    analysis.add_argument("--standardize", action="store_true", default=None,
                          help="z-score features before clustering")

    transfer = argparse.ArgumentParser(add_help=False)
    transfer.add_argument("--robot", metavar="PATH", help="robot config (default: bundled generic6)")

    parser = argparse.ArgumentParser(prog="skilltransfer",
                                     description="Cluster demonstration trials and transfer prototypes to a robot arm.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    sub.add_parser("analyze", parents=[common, analysis], help="features, clustering and prototypes")
    sub.add_parser("transfer", parents=[common, transfer], help="joint velocities for each prototype")
    sub.add_parser("run", parents=[common, analysis, transfer],
                   help="synth (unless --input is given), analyze and transfer")
    return parser


def _config(args) -> PipelineConfig:
    return PipelineConfig.load(
        args.config,
        out=args.out,
        seed=args.seed,
        input=getattr(args, "input", None),
        k=getattr(args, "k", None),
        standardize=getattr(args, "standardize", None),
        robot=getattr(args, "robot", None),
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        if args.command in ("transfer", "run"):
            try:
                robot.load_robot(cfg.raw["robot"])
            except (OSError, ValueError) as exc:
                raise ConfigError(f"robot config invalid: {exc}") from None
        status = EXIT_OK
        if args.command == "synth" or (args.command == "run" and cfg.raw["input"] is None):
            pipeline.run_synth(cfg)
        if args.command in ("analyze", "run"):
            analysis = pipeline.run_analyze(cfg)
            counts = analysis["counts"]
            print(f"accepted {counts['accepted']} of {counts['ingested']} trials; "
                  f"k = {analysis['clusters']['k']}, mean silhouette "
                  f"{analysis['clusters']['silhouette_mean']:.3f}")
        if args.command in ("transfer", "run"):
            report, status = pipeline.run_transfer(cfg)
            n_ok = sum(bool(e["feasible"]) for e in report["transfer"])
            print(f"{n_ok} of {len(report['transfer'])} prototypes feasible; report in {cfg.out / pipeline.REPORT_FILE}")
        return status
    except (ConfigError, ClusteringError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
