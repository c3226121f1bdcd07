"""Command-line front end.

Subcommands:
  run     execute a single scenario file
  design  execute a built-in full-factorial design (or just export it)
  report  regenerate figure data and allocation-of-variation tables

Exit codes: 0 success, 1 configuration error, 2 run failure,
3 incomplete results. The master seed can be overridden with the
AFSAT_SEED environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .config import ConfigError, load_scenario
from .factorial import MODES
from .harness import (MASTER_SEED_ENV, RESPONSES, IncompleteResultsError,
                      ReportError, RunFailureError, run_design, run_single,
                      write_report)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUN = 2
EXIT_INCOMPLETE = 3


def _master_seed(cli_value: int | None) -> int:
    env = os.environ.get(MASTER_SEED_ENV)
    if cli_value is not None:
        return cli_value
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError([f"{MASTER_SEED_ENV}: not an integer: {env!r}"])
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="afsat",
        description="satellite assured-forwarding simulator and study harness")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single scenario file")
    p_run.add_argument("--config", required=True, help="scenario file (INI)")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")

    p_design = sub.add_parser("design", help="run a built-in design")
    p_design.add_argument("--mode", required=True, choices=MODES)
    p_design.add_argument("--out", required=True, help="output directory")
    p_design.add_argument("--seed", type=int, default=None,
                          help="master seed (default 1, or AFSAT_SEED)")
    p_design.add_argument("--jobs", type=int, default=None,
                          help="worker processes (default: cpu count)")
    p_design.add_argument("--export-only", action="store_true",
                          help="write design.csv without simulating")

    p_report = sub.add_parser("report", help="derive reports from results")
    p_report.add_argument("--results", required=True,
                          help="directory written by `design`")
    p_report.add_argument("--response", required=True,
                          choices=[*sorted(RESPONSES), "all"])
    p_report.add_argument("--out", default=None,
                          help="report directory (default: results dir)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            scenario = load_scenario(args.config)
            if args.seed is not None:
                from dataclasses import replace
                scenario = replace(scenario, seed=args.seed)
            result = run_single(scenario, args.out)
            print(f"run complete: {result.run.events_dispatched} events, "
                  f"fairness {result.run.fairness:.4f}")
        elif args.command == "design":
            seed = _master_seed(args.seed)
            results = run_design(args.mode, args.out, jobs=args.jobs,
                                 master_seed=seed,
                                 design_only=args.export_only)
            if args.export_only:
                print(f"design exported to {args.out}/design.csv")
            else:
                print(f"design complete: {len(results)} runs -> {args.out}")
        elif args.command == "report":
            responses = (sorted(RESPONSES) if args.response == "all"
                         else [args.response])
            for response in responses:
                report = write_report(args.results, response, args.out)
                top = report.ranked_terms()[0]
                print(f"{response}: top term {top[0]!r} "
                      f"at {top[1]:.2f}% of variation")
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except ReportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RunFailureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUN
    except IncompleteResultsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
