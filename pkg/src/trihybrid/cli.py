"""Command-line entry point for batch simulations.

Subcommands: ``run`` (single-cell Monte-Carlo experiment), ``sweep`` (axis
sweep), ``tradeoff`` (communication-weight sweep), and ``beampattern``
(post-process a finished run directory into pattern grids).  Exit codes:
0 success, 1 when any trial failed, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import SCHEMES, ConfigError, load_experiment_config
from .harness import export_beampattern, load_run_dir, run_experiment, tradeoff_sweep

MODEL_TO_SCHEME = {
    "i": "RA-AO-ClosedForm-I",
    "ii": "RA-AO-BruteForce-II",
    "oa": "OA-HBF",
    "cosa": "CosA-HBF",
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", help="experiment config file")
    parser.add_argument("--seed", type=int, default=None, help="override the experiment seed")
    parser.add_argument("--trials", type=int, default=None, help="override the trial count")
    parser.add_argument("--out", default=None, help="override the output directory")
    parser.add_argument(
        "--scheme",
        action="append",
        default=None,
        choices=SCHEMES,
        help="restrict to a scheme (repeatable)",
    )
    parser.add_argument(
        "--model",
        choices=sorted(MODEL_TO_SCHEME),
        default=None,
        help="shorthand for a single scheme by antenna model",
    )


def _load(args) -> object:
    config = load_experiment_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.trials is not None:
        config.trials = args.trials
    if args.out is not None:
        config.out_dir = args.out
    if args.model is not None:
        config.schemes = (MODEL_TO_SCHEME[args.model],)
    elif args.scheme:
        config.schemes = tuple(args.scheme)
    config.validate()
    return config


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="trihybrid", description="Tri-hybrid ISAC beamforming batch simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("run", "run the configured schemes at the base scenario"),
        ("sweep", "run the configured sweep axis over its values"),
        ("tradeoff", "sweep the communication weight and export the trade-off curve"),
    ):
        _add_common(sub.add_parser(name, help=text))
    bp = sub.add_parser("beampattern", help="export beampatterns from a run directory")
    bp.add_argument("run_dir", help="directory produced by `trihybrid run`")
    bp.add_argument("--out", default=None, help="output directory (default: run_dir)")
    args = parser.parse_args(argv)

    try:
        if args.command == "beampattern":
            out_dir = args.out or args.run_dir
            os.makedirs(out_dir, exist_ok=True)
            cells = load_run_dir(args.run_dir)
            if not cells:
                print("no beamformer snapshots found in run directory", file=sys.stderr)
                return 2
            for cell in cells:
                tag = cell["scheme"].lower().replace("-", "_")
                export_beampattern(
                    cell["coeffs"],
                    cell["f_rf"] @ cell["f_bb"],
                    cell["scenario"],
                    cell["domain"],
                    os.path.join(out_dir, f"beampattern_{tag}.csv"),
                    os.path.join(out_dir, f"markers_{tag}.csv"),
                )
                print(f"wrote beampattern_{tag}.csv")
            return 0

        config = _load(args)
        if args.command == "tradeoff":
            manifest = tradeoff_sweep(config)
            print(f"wrote {manifest['tradeoff_csv']} ({manifest['points']} points)")
            return 0
        manifest = run_experiment(config, sweeping=(args.command == "sweep"))
        print(
            f"wrote {manifest['results_csv']} "
            f"({manifest['rows']} rows, {manifest['failures']} failures)"
        )
        return 1 if manifest["failures"] else 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
