"""Command line entry point.

Examples
--------
  qfragility run --spec scenario.json --out report.csv --format csv --seed 42
  qfragility sweep --spec scenario.json --dx 0.1,0.05,0.025,0.0125 --format json
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .errors import QFragilityError
from .scenarios import ScenarioSpec, emit_report, run_scenario

log = logging.getLogger("qfragility")


def _parse_dx(text: str) -> list:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad dx list {text!r}") from exc
    if any(v <= 0 for v in values):
        raise argparse.ArgumentTypeError("dx values must be positive")
    return values


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qfragility",
        description="Quantum Fisher information versus purity loss under phase noise.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", required=True, help="scenario JSON file")
    common.add_argument("--out", default="-", help="output path ('-' for stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=None, help="override averaging seed")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    sub.add_parser("run", parents=[common], help="evaluate the scenario as specified")
    sw = sub.add_parser("sweep", parents=[common], help="evaluate over a list of dx values")
    sw.add_argument("--dx", type=_parse_dx, required=True,
                    help="comma-separated noise widths, e.g. 0.1,0.05,0.025")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    logging.captureWarnings(True)
    try:
        spec = ScenarioSpec.from_file(args.spec)
        if args.seed is not None:
            spec = dataclasses.replace(spec, seed=args.seed)
        if args.command == "sweep":
            spec = dataclasses.replace(spec, sweep=args.dx)
        report = run_scenario(spec, workers=args.workers)
        emit_report(report, args.format, args.out)
    except (QFragilityError, OSError) as exc:
        log.error("%s", exc)
        return 2
    failed = [r for r in report.rows if r["error"]]
    for r in failed:
        log.warning("dx=%s failed: %s", r["dx"], r["error"])
    if args.out != "-":
        log.info("wrote %d rows to %s", len(report.rows), args.out)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
