"""Figure rendering for two-spin sweep CSV outputs."""

__version__ = "0.1.0"

from .io import FormatError, read_columns, reshape_grid  # noqa: F401
from .render import DEFAULT_LEVELS, FigureRequest, RenderInfo, render  # noqa: F401
