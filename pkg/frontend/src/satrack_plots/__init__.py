"""Figure rendering for satrack CSV traces."""

from .figures import (
    FIGURE_KINDS,
    FigureSpec,
    MissingColumnError,
    TraceError,
    build_figure,
    read_trace,
    render,
)

__version__ = "0.1.0"
__all__ = ["FIGURE_KINDS", "FigureSpec", "MissingColumnError", "TraceError",
           "build_figure", "read_trace", "render"]
