"""CSV ingestion for sweep outputs.

Expected layout (as written by the simulator): a header row naming the
columns, `offset_i_hz` first, optionally `offset_s_hz` second, then one
column per observable; rows in row-major order with the I offset as the
outer loop.
"""

from __future__ import annotations

import csv

import numpy as np

__all__ = ["GridData", "read_columns", "reshape_grid"]


class FormatError(Exception):
    """CSV does not match the expected sweep layout."""


def read_columns(path) -> dict[str, np.ndarray]:
    """Parse the CSV into named float columns (insertion-ordered)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if not header or header[0] != "offset_i_hz":
            raise FormatError(f"{path}: first column must be offset_i_hz")
        rows = list(reader)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    cols: dict[str, np.ndarray] = {}
    try:
        data = np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric cell ({exc})") from None
    if data.shape[1] != len(header):
        raise FormatError(f"{path}: ragged rows")
    for k, name in enumerate(header):
        cols[name] = data[:, k]
    return cols


class GridData:
    """A 2-D observable reshaped onto its rectangular offset grid."""

    def __init__(self, axis_i: np.ndarray, axis_s: np.ndarray, values: np.ndarray):
        self.axis_i = axis_i
        self.axis_s = axis_s
        self.values = values


def reshape_grid(cols: dict[str, np.ndarray], observable: str) -> GridData:
    """Reshape one observable column onto the (i, s) offset grid.

    Requires a complete rectangular grid in row-major order.
    """
    if "offset_s_hz" not in cols:
        raise FormatError("contour input needs an offset_s_hz column")
    if observable not in cols:
        raise FormatError(f"no column named {observable!r}")
    off_i, off_s = cols["offset_i_hz"], cols["offset_s_hz"]
    axis_i = np.unique(off_i)
    axis_s = np.unique(off_s)
    n = len(axis_i) * len(axis_s)
    if len(off_i) != n:
        raise FormatError(f"grid incomplete: {len(off_i)} rows for "
                          f"{len(axis_i)}x{len(axis_s)} axes")
    want_i = np.repeat(axis_i, len(axis_s))
    want_s = np.tile(axis_s, len(axis_i))
    if not (np.array_equal(off_i, want_i) and np.array_equal(off_s, want_s)):
        raise FormatError("grid not in complete row-major order")
    values = cols[observable].reshape(len(axis_i), len(axis_s))
    return GridData(axis_i, axis_s, values)
