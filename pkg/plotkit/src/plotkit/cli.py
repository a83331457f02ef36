"""Entry points: ``plot_profile <csv> <out>`` and
``plot_contour <csv> <observable> <out> [--levels ...]``."""

from __future__ import annotations

import argparse
import sys

from .io import FormatError
from .render import DEFAULT_LEVELS, FigureRequest, render


def main_profile(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot_profile", description="overlay profile curves from a sweep CSV")
    parser.add_argument("csv")
    parser.add_argument("out")
    parser.add_argument("--observable", default=None,
                        help="restrict to one observable (or its per-duration columns)")
    args = parser.parse_args(argv)
    return _run(FigureRequest(args.csv, "profile", args.out, args.observable))


def main_contour(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot_contour", description="filled contour map of one observable")
    parser.add_argument("csv")
    parser.add_argument("observable")
    parser.add_argument("out")
    parser.add_argument("--levels", type=float, nargs="+",
                        default=list(DEFAULT_LEVELS))
    args = parser.parse_args(argv)
    try:
        req = FigureRequest(args.csv, "contour", args.out, args.observable,
                            tuple(args.levels))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return _run(req)


def _run(req: FigureRequest) -> int:
    try:
        info = render(req)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if req.figure_kind == "contour":
        reached = "none" if info.highest_level is None else f"{info.highest_level:g}"
        print(f"wrote {req.output_path} (highest contour level reached: {reached})")
    else:
        print(f"wrote {req.output_path} ({len(info.curve_labels)} curves)")
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main_profile())
