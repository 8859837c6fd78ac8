"""Command line: render a PlotSpec file, or give the spec fields as flags.

    figplots render spec.toml
    figplots render --kind fringes --output fig.png sweep1.csv sweep2.csv
"""
from __future__ import annotations

import argparse
import sys

from .plotspec import KINDS, PlotSpec, load_plotspec
from .render import render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figplots", description="Render simulator CSV/PGM outputs into figures."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("render", help="render one figure")
    r.add_argument("spec_or_inputs", nargs="+",
                   help="a PlotSpec TOML file, or input data files when --kind is given")
    r.add_argument("--kind", choices=KINDS, default=None)
    r.add_argument("--output", default=None, help="output image path")
    r.add_argument("--title", default="")
    r.add_argument("--x-label", default="")
    r.add_argument("--y-label", default="")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.kind is None:
            if len(args.spec_or_inputs) != 1:
                raise ValueError("without --kind, pass exactly one PlotSpec file")
            spec = load_plotspec(args.spec_or_inputs[0])
        else:
            if not args.output:
                raise ValueError("--output is required with --kind")
            spec = PlotSpec(
                kind=args.kind,
                inputs=tuple(args.spec_or_inputs),
                output=args.output,
                title=args.title,
                x_label=args.x_label,
                y_label=args.y_label,
            )
        out = render(spec)
    except (ValueError, FileNotFoundError, OSError) as exc:
        print(f"figplots: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
