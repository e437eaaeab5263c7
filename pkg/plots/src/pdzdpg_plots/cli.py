"""Command-line entry: ``plot --kind ... --in ... --out ...``.

Exit codes follow the training CLI: 0 on success, 2 for bad inputs,
1 for anything unexpected.
"""

from __future__ import annotations

import argparse
import sys

from .figures import PLOTTERS, FigureSpec


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="render figures from experiment aggregate and timing CSVs",
    )
    parser.add_argument("--kind", required=True, choices=sorted(PLOTTERS))
    parser.add_argument(
        "--in", dest="inputs", required=True, nargs="+", metavar="CSV",
        help="aggregate CSVs (convergence, violations) or timing CSVs (timing)",
    )
    parser.add_argument(
        "--benchmark", nargs="*", default=[], metavar="JSON",
        help="benchmark sidecars drawn as horizontal reference lines",
    )
    parser.add_argument("--out", required=True, help="output PNG path")
    parser.add_argument("--metric", default="ma_sumrate", help="convergence metric column")
    parser.add_argument(
        "--label", action="append", default=None, metavar="NAME",
        help="legend label per input, repeatable (default: parent directory name)",
    )
    parser.add_argument("--burn-in", type=int, default=0, help="drop iterations <= this")
    parser.add_argument("--title", default=None)
    parser.add_argument("--xlabel", default=None)
    parser.add_argument("--ylabel", default=None)
    parser.add_argument("--dpi", type=int, default=150)
    return parser


def entrypoint(argv: list[str] | None = None) -> None:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            inputs=tuple(args.inputs),
            out=args.out,
            benchmarks=tuple(args.benchmark),
            metric=args.metric,
            labels=tuple(args.label) if args.label else (),
            xlabel=args.xlabel,
            ylabel=args.ylabel,
            title=args.title,
            burn_in=args.burn_in,
            dpi=args.dpi,
        )
        out = PLOTTERS[args.kind](spec)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        sys.exit(2)
    except Exception as err:  # pragma: no cover - last resort
        print(f"error: {err}", file=sys.stderr)
        sys.exit(1)
    print(f"wrote {out}")
    sys.exit(0)
