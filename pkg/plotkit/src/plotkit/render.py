"""Render sweep CSVs to figures: overlaid line profiles and filled contour
maps.  No golden images anywhere; :func:`render` reports what it drew so
callers and tests can assert on ranges and labels instead of pixels."""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import FormatError, read_columns, reshape_grid  # noqa: E402

__all__ = ["FigureRequest", "RenderInfo", "render"]

DEFAULT_LEVELS = (0.5, 0.8, 0.9, 0.91, 0.95)


@dataclass(frozen=True)
class FigureRequest:
    csv_path: str
    figure_kind: str  # "profile" | "contour"
    output_path: str
    observable: str | None = None  # required for contour
    levels: tuple[float, ...] = DEFAULT_LEVELS

    def __post_init__(self) -> None:
        if self.figure_kind not in ("profile", "contour"):
            raise ValueError(f"unknown figure kind {self.figure_kind!r}")
        if self.figure_kind == "contour" and not self.observable:
            raise ValueError("contour figures need an observable column name")
        if self.levels and list(self.levels) != sorted(set(self.levels)):
            raise ValueError("levels must be strictly increasing")


@dataclass(frozen=True)
class RenderInfo:
    """What ended up on the canvas."""

    x_range: tuple[float, float]
    y_range: tuple[float, float]
    curve_labels: tuple[str, ...] = ()
    highest_level: float | None = None


def _render_profile(req: FigureRequest, cols) -> RenderInfo:
    offsets = cols["offset_i_hz"]
    names = [n for n in cols if n not in ("offset_i_hz", "offset_s_hz")]
    if req.observable:
        prefix = req.observable
        names = [n for n in names if n == prefix or n.startswith(prefix + "_")]
        if not names:
            raise FormatError(f"no column named or prefixed {prefix!r}")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name in names:
        ax.plot(offsets, cols[name], label=name, linewidth=1.2)
    ax.set_xlim(float(offsets.min()), float(offsets.max()))
    ax.set_xlabel("resonance offset (Hz)")
    ax.set_ylabel("normalized amplitude")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(req.output_path)
    info = RenderInfo(x_range=ax.get_xlim(), y_range=ax.get_ylim(),
                      curve_labels=tuple(names))
    plt.close(fig)
    return info


def _render_contour(req: FigureRequest, cols) -> RenderInfo:
    grid = reshape_grid(cols, req.observable)
    vmax = float(grid.values.max())
    achieved = [lv for lv in req.levels if lv <= vmax]
    highest = achieved[-1] if achieved else None
    fig, ax = plt.subplots(figsize=(6, 5))
    # contourf wants strictly increasing levels spanning the data
    lo = min(float(grid.values.min()), min(req.levels)) - 1e-9
    hi = max(vmax, max(req.levels)) + 1e-9
    levels = [lo, *req.levels, hi]
    cs = ax.contourf(grid.axis_s, grid.axis_i, grid.values, levels=levels,
                     cmap="viridis")
    ax.contour(grid.axis_s, grid.axis_i, grid.values, levels=list(req.levels),
               colors="k", linewidths=0.5)
    fig.colorbar(cs, ax=ax, label=req.observable)
    ax.set_xlabel("spin S offset (Hz)")
    ax.set_ylabel("spin I offset (Hz)")
    title = f"{req.observable}"
    if highest is not None:
        title += f" (highest contour level reached: {highest:g})"
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(req.output_path)
    info = RenderInfo(x_range=ax.get_xlim(), y_range=ax.get_ylim(),
                      highest_level=highest)
    plt.close(fig)
    return info


def render(req: FigureRequest) -> RenderInfo:
    """Read the request's CSV, draw the figure, write the image file.

    Raises :class:`plotkit.io.FormatError` on a missing column or an
    incomplete/ragged grid; never writes a partial image in that case.
    """
    cols = read_columns(req.csv_path)
    if req.figure_kind == "profile":
        return _render_profile(req, cols)
    return _render_contour(req, cols)
