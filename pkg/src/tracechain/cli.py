"""Command-line entry point.

    tracechain run SCENARIO -o OUTDIR [--group toy|production]
                   [--usd-per-gas X] [--seed N] [--no-figures]
    tracechain show-scenario NAME

SCENARIO is a path to a JSON file or one of the bundled names
(``default``, ``attacks``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .errors import ScenarioError
from .scenario import load_scenario, run_scenario

log = logging.getLogger("tracechain")

BUNDLED = ("default", "attacks")


def _bundled_path(name: str) -> Path:
    return Path(str(resources.files("tracechain").joinpath(f"data/{name}_scenario.json")))


def _resolve(name: str) -> Path:
    if name in BUNDLED and not Path(name).exists():
        return _bundled_path(name)
    return Path(name)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tracechain", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario and write reports")
    run.add_argument("scenario", help="scenario JSON path or bundled name")
    run.add_argument("-o", "--output", default="out", help="output directory (default: out)")
    run.add_argument("--group", choices=["toy", "production"])
    run.add_argument("--usd-per-gas", type=float, default=None,
                     help="USD per gas unit (default 1.1622e-6)")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--no-figures", action="store_true", help="skip the fee chart")

    show = sub.add_parser("show-scenario", help="print a bundled scenario")
    show.add_argument("name", choices=BUNDLED)
    return parser


def _run(args) -> int:
    scenario = load_scenario(_resolve(args.scenario))
    result = run_scenario(scenario, group=args.group, usd_per_gas=args.usd_per_gas,
                          seed=args.seed)
    paths = result.write(args.output, figures=not args.no_figures)
    names = result.chain.address_book()
    for report in result.reports.values():
        print(report.to_text(names))
    for outcome in result.attacks:
        flag = "ok" if outcome.matches_expectation else "UNEXPECTED"
        print(f"attack {outcome.kind} on {outcome.product_id}: {outcome.verdict} [{flag}]")
    print()
    print(result.fees.to_text(), end="")
    for key, path in paths.items():
        log.info("wrote %s -> %s", key, path)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            return _run(args)
        print(json.dumps(json.loads(_bundled_path(args.name).read_text()), indent=2))
        return 0
    except ScenarioError as exc:
        print(f"tracechain: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
