"""Command-line front end.

    qhjspin <command> --scenario <path> --out <dir> [--branch s0|z0] [--tol <float>]
"""
import argparse
import logging
import sys

from .errors import ScenarioError
from .runner import COMMANDS, EXIT_INVALID, run_scenario
from .scenario import load_scenario


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qhjspin",
        description="Spin-1/2 relativistic quantum Hamilton-Jacobi laboratory",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--scenario", required=True, help="scenario YAML file")
    parser.add_argument("--out", help="output directory (default: scenario output.directory or '.')")
    parser.add_argument("--branch", choices=("s0", "z0"), help="override the scenario's action branch")
    parser.add_argument("--tol", type=float, help="override solver and trajectory tolerances")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for the sweep command")
    parser.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        scenario = load_scenario(args.scenario).with_overrides(branch=args.branch, tol=args.tol)
    except ScenarioError as exc:
        print(exc.diagnostic(), file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = args.out or scenario.output_dir or "."
    figures = False if args.no_figures else None
    return run_scenario(scenario, args.command, out, jobs=max(1, args.jobs), figures=figures)


if __name__ == "__main__":
    sys.exit(main())
