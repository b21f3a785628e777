"""Command-line entry point: run experiments, merge reports, emit CSV/JSON.

Option precedence per value: built-in defaults, then the --config file, then
explicit flags.  Without --out the report JSON goes to stdout.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import (EXPERIMENTS, ExperimentConfig, RUNNERS, RunReport,
                      emit_report, merge_reports)

_FLAG_FIELDS = ("alpha", "e0", "window", "n", "h", "cells", "trials",
                "master_seed", "variant")


def _window(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("window must be 'lo,hi'")
    return float(parts[0]), float(parts[1])


def _add_run_parser(subparsers, name: str, help_text: str):
    p = subparsers.add_parser(name, help=help_text)
    p.add_argument("--config", metavar="FILE",
                   help="JSON file with ExperimentConfig fields")
    p.add_argument("--alpha", type=float, help="envelope decay exponent")
    p.add_argument("--e0", type=float, help="reference energy (local/limit)")
    p.add_argument("--window", type=_window, metavar="a,b",
                   help="rescaled window (local/limit) or energy window "
                        "(global); use --window=a,b when a is negative")
    p.add_argument("--n", type=float, help="box length")
    p.add_argument("--h", type=float, help="grid step")
    p.add_argument("--cells", type=int, help="shape measure cells")
    p.add_argument("--trials", type=int, help="number of Monte Carlo trials")
    p.add_argument("--seed", dest="master_seed", type=int, help="master seed")
    p.add_argument("--variant", choices=("decaying", "dc"),
                   help="envelope variant")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes (default 1)")
    p.add_argument("--trial-start", type=int, default=None,
                   help="first trial index to run (default 0)")
    p.add_argument("--trial-stop", type=int, default=None,
                   help="one past the last trial index (default trials)")
    _add_output_flags(p)
    return p


def _add_output_flags(p):
    p.add_argument("--out", metavar="PATH", help="output path (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="output format (default json)")


def _build_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ValueError(f"config file {args.config} must hold a JSON object")
        data.update(loaded)
    for key in _FLAG_FIELDS:
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    data["experiment"] = args.command
    return ExperimentConfig.from_dict(data)


def _emit(report: RunReport, args) -> None:
    if args.out:
        emit_report(report, args.format, args.out)
    elif args.format == "csv":
        raise ValueError("csv output requires --out")
    else:
        sys.stdout.write(report.to_json())


def _run_command(args) -> int:
    cfg = _build_config(args)
    trial_range = None
    if args.trial_start is not None or args.trial_stop is not None:
        start = args.trial_start if args.trial_start is not None else 0
        stop = args.trial_stop if args.trial_stop is not None else cfg.trials
        trial_range = (start, stop)
    report = RUNNERS[cfg.experiment](cfg, jobs=args.jobs,
                                     trial_range=trial_range)
    _emit(report, args)
    if cfg.experiment == "crosscheck":
        return 0 if report.statistics.get("failures", 0.0) == 0.0 else 1
    return 0


def _merge_command(args) -> int:
    reports = [RunReport.load(path) for path in args.reports]
    merged = reports[0]
    for other in reports[1:]:
        merged = merge_reports(merged, other)
    _emit(merged, args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decay-spectra",
        description="Eigenvalue statistics and eigenvector shapes for 1-d "
                    "Schrodinger operators with decaying random potential")
    subparsers = parser.add_subparsers(dest="command", required=True)
    _add_run_parser(subparsers, "local",
                    "rescaled eigenvalue process near a reference energy")
    _add_run_parser(subparsers, "global",
                    "shape measure of a uniformly picked eigenvalue in J")
    _add_run_parser(subparsers, "limit",
                    "samples of the limiting objects only")
    _add_run_parser(subparsers, "crosscheck",
                    "standing oracle battery (exit code 1 on any failure)")
    merge = subparsers.add_parser("merge",
                                  help="merge reports over disjoint trial ranges")
    merge.add_argument("reports", nargs="+", metavar="REPORT.json")
    _add_output_flags(merge)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "merge":
            return _merge_command(args)
        return _run_command(args)
    except (ValueError, OSError) as exc:
        print(f"decay-spectra: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
