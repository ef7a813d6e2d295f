"""Command line for rendering experiment figures from CSV traces."""

from __future__ import annotations

import argparse
import sys

from .render import PLOT_KINDS, PlotSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bandit-nav-plots", description="Render experiment CSVs into figures")
    parser.add_argument("inputs", nargs="+", help="input CSV files (traces, or the scaling table)")
    parser.add_argument("--kind", required=True, choices=PLOT_KINDS)
    parser.add_argument("--out", required=True, help="output image path (.png or .svg)")
    parser.add_argument("--network", help="network CSV with coordinates (heatmap only)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(kind=args.kind, inputs=tuple(args.inputs), output=args.out, network=args.network)
    try:
        out = render(spec)
    except (ValueError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
