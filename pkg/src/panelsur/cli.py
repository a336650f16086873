"""Command-line interface.

Subcommands:
  estimate  run the full replication pipeline from a config file
  cluster   print the median split for one indicator
  dummy     print the crisis dummy panel derived from an event calendar

Exit codes: 0 success, 2 input/configuration error, 3 estimation failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import EstimationError, InputError, PanelSurError, SpecificationError
from .io import read_config, read_events_csv, read_scores_csv
from .report import emit_report
from .study import crisis_dummy, median_cluster, replicate

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ESTIMATION = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="panelsur",
        description="Panel EGLS (Period SUR) estimation and replication tool",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    estimate = sub.add_parser("estimate", help="run a replication config")
    estimate.add_argument("--config", required=True, type=Path, help="run config file")
    estimate.add_argument(
        "--output",
        choices=("text", "json", "both"),
        default="text",
        help="report format (default: text)",
    )
    estimate.add_argument(
        "--out-dir",
        type=Path,
        default=None,
        help="write report.txt / report.json here instead of stdout",
    )

    cluster = sub.add_parser("cluster", help="median-split countries by indicator score")
    cluster.add_argument("--scores", required=True, type=Path, help="score CSV")
    cluster.add_argument("--indicator", required=True, help="indicator name")

    dummy = sub.add_parser("dummy", help="print the crisis dummy panel")
    dummy.add_argument("--events", required=True, type=Path, help="event CSV")
    dummy.add_argument("--horizon", required=True, type=int, help="last year of the panel")
    return parser


def _cmd_estimate(args: argparse.Namespace) -> int:
    config = read_config(args.config)
    bundle = replicate(config)
    modes = ("text", "json") if args.output == "both" else (args.output,)
    if args.out_dir is not None:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        for mode in modes:
            suffix = "txt" if mode == "text" else "json"
            target = args.out_dir / f"report.{suffix}"
            target.write_text(emit_report(bundle, mode), encoding="utf-8")
            print(f"wrote {target}", file=sys.stderr)
    else:
        for i, mode in enumerate(modes):
            if i:
                print()
            print(emit_report(bundle, mode), end="")
    return EXIT_OK


def _cmd_cluster(args: argparse.Namespace) -> int:
    scores = read_scores_csv(args.scores)
    assignment = median_cluster(scores, args.indicator)
    print(f"indicator: {assignment.indicator}")
    print(f"countries: {len(assignment.inclusive) + len(assignment.extractive)}")
    print(f"median: {assignment.median:.6f}")
    inclusive = " ".join(sorted(assignment.inclusive))
    extractive = " ".join(sorted(assignment.extractive))
    print(f"inclusive ({len(assignment.inclusive)}): {inclusive}")
    print(f"extractive ({len(assignment.extractive)}): {extractive}")
    return EXIT_OK


def _cmd_dummy(args: argparse.Namespace) -> int:
    calendar = read_events_csv(args.events, horizon_end=args.horizon)
    first = min(start for spans in calendar.intervals.values() for start, _ in spans)
    years = list(range(first, args.horizon + 1))
    print("country," + ",".join(str(y) for y in years))
    for country in sorted(calendar.countries()):
        cells = [str(crisis_dummy(calendar, country, year)) for year in years]
        print(country + "," + ",".join(cells))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "estimate": _cmd_estimate,
        "cluster": _cmd_cluster,
        "dummy": _cmd_dummy,
    }
    try:
        return handlers[args.command](args)
    except (InputError, SpecificationError) as exc:
        print(f"panelsur: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (EstimationError, PanelSurError) as exc:
        print(f"panelsur: estimation error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION


if __name__ == "__main__":
    raise SystemExit(main())
