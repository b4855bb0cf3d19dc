"""Command-line figure rendering.

Exit codes: 0 success, 1 input/schema error, 2 unexpected failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FigureSpec, SchemaError, render_bound_figure, render_convergence_figure


def _image_format(args) -> str | None:
    return "png" if args.raster else None


def _cmd_bound(args) -> int:
    spec = FigureSpec(
        kind="bound-vs-param",
        out=Path(args.out),
        aggregate=Path(args.input),
        xlabel=args.xlabel,
        ylabel=args.ylabel,
        image_format=_image_format(args),
    )
    result = render_bound_figure(spec)
    print(f"wrote {result.out_path} ({result.series['param'].size} grid points)")
    return 0


def _cmd_convergence(args) -> int:
    spec = FigureSpec(
        kind="convergence-vs-iteration",
        out=Path(args.out),
        traces_dir=Path(args.traces),
        optimal=args.optimal,
        xlabel=args.xlabel,
        ylabel=args.ylabel,
        image_format=_image_format(args),
    )
    result = render_convergence_figure(spec)
    n_iters = result.series["iteration"].size
    print(f"wrote {result.out_path} ({n_iters} iterations)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="discrim-plot",
        description="Render figures from training-run CSV outputs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", required=True, help="output image path")
    common.add_argument("--raster", action="store_true",
                        help="default to PNG instead of PDF when --out has no extension")
    common.add_argument("--xlabel", default=None, help="horizontal axis label override")
    common.add_argument("--ylabel", default=None, help="vertical axis label override")

    p_bound = sub.add_parser(
        "bound", parents=[common],
        help="optimum curve with median/interquartile markers per grid point",
    )
    p_bound.add_argument("--in", dest="input", required=True, help="aggregate.csv path")
    p_bound.set_defaults(func=_cmd_bound)

    p_conv = sub.add_parser(
        "convergence", parents=[common],
        help="per-iteration convergence of one grid point's repetitions",
    )
    p_conv.add_argument("--traces", required=True, help="directory holding trace_*.csv files")
    p_conv.add_argument("--optimal", type=float, required=True,
                        help="optimal error probability reference line")
    p_conv.set_defaults(func=_cmd_convergence)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())
