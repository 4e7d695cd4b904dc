"""Command line interface: figures <figure-id> --in PATH [--in PATH] --out PATH.png"""
from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_IDS, FigureSpec, MissingColumnError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render experiment-sweep figures from harness CSV files")
    parser.add_argument("figure_id", choices=FIGURE_IDS, metavar="figure-id",
                        help=f"one of: {', '.join(FIGURE_IDS)}")
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        metavar="PATH", help="input CSV (repeatable)")
    parser.add_argument("--out", required=True, metavar="PATH.png",
                        help="output image path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(args.figure_id, tuple(args.inputs), args.out)
    try:
        result = render(spec)
    except (MissingColumnError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    note = f", {len(result.omitted)} unstable cells noted" if result.omitted \
        else ""
    print(f"{spec.figure_id}: {len(result.series)} series -> "
          f"{result.output}{note}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
