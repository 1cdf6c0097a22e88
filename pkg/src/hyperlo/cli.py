"""Command-line entry point: ``hyperlo {theory,simulate,sweep,fixed-target,validate}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import InvalidConfiguration
from .experiments import (
    build_spec,
    cmd_fixed_target,
    cmd_simulate,
    cmd_sweep,
    cmd_theory,
    cmd_validate,
    read_config,
)
from .output import write

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_VALIDATION = 2

log = logging.getLogger("hyperlo")

_GRID_HELP = {
    "n": "problem sizes, e.g. 1000 or 1e4,1e5 or 100:1000:100",
    "k": "operator counts (flips 1..k), e.g. 2,3,4",
    "tau": "learning periods: 500 (evaluations), 10n, 0.6nlnn, omega (theory only), or start:stop:step with a unit",
    "mechanism": "simple, permutation, greedy, random-gradient, grg (theory: grg, simple, opt)",
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file; flags given here override it")
    for key, text in _GRID_HELP.items():
        p.add_argument(f"--{key}", help=text)
    p.add_argument("--engine", help="exact, fast or auto (fast where a model exists)")
    p.add_argument("--family", help="bitflip (with replacement), rls (without replacement) or sbm")
    p.add_argument("--model", help="fast-engine probabilities: leading (dominant term) or exact")
    p.add_argument("--replicates", help="runs per grid point (default 10000)")
    p.add_argument("--seed", help="master seed (default 0)")
    p.add_argument("--w", help="stage count of the learning-period bound (default 100000)")
    p.add_argument("--targets", help="fixed targets: fractions of n in (0,1] or integer levels")
    p.add_argument("--weights", help="simple random selection weights, e.g. 0.25,0.75")
    p.add_argument("--rate", help="per-bit rate for --family sbm (default 1/n)")
    p.add_argument("--p1", help="weight of the 1-flip operator for the two-operator simple random constant")
    p.add_argument("--epsilon", help="margin in the learning-period validity check (default 0.01)")
    p.add_argument("--jobs", help="worker threads (results do not depend on it)")
    p.add_argument("--out", help="output file: .csv, .dat or .json (default: table on stdout)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperlo",
        description="Runtime constants and simulations of selection hyper-heuristics on LeadingOnes.",
    )
    parser.add_argument("--version", action="version", version=f"hyperlo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("theory", "evaluate closed-form runtime constants over a k x tau grid"),
        ("simulate", "simulate every grid point and report mean runtimes"),
        ("sweep", "simulate a grid and add the matching closed-form prediction"),
        ("fixed-target", "mean first-hitting times of fitness targets, with theory curves"),
        ("validate", "run the oracle checks and print a JSON report"),
    ):
        _add_common(sub.add_parser(name, help=text, description=text))
    return parser


_NON_SPEC = {"command", "config", "verbose"}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        raw: dict[str, str] = read_config(args.config) if args.config else {}
        file_command = raw.pop("command", None)
        if file_command and file_command != args.command:
            log.warning("config file names command %r; running %r", file_command, args.command)
        for key, value in vars(args).items():
            if key not in _NON_SPEC and value is not None:
                raw[key] = value
        spec = build_spec(args.command, raw)

        if spec.command == "validate":
            report, ok = cmd_validate(spec)
            text = json.dumps(report, indent=2, sort_keys=True) + "\n"
            if spec.out:
                Path(spec.out).write_text(text)
            else:
                sys.stdout.write(text)
            return EXIT_OK if ok else EXIT_VALIDATION

        runner = {
            "theory": cmd_theory,
            "simulate": cmd_simulate,
            "sweep": cmd_sweep,
            "fixed-target": cmd_fixed_target,
        }[spec.command]
        write(runner(spec), spec.out)
    except InvalidConfiguration as exc:
        print(f"hyperlo: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
