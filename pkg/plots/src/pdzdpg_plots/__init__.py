"""Figure rendering for pdzdpg experiment outputs.

Consumes only the files the training harness writes (aggregate CSVs,
benchmark JSON sidecars, timing CSVs); no computation happens here beyond
drawing.
"""

from .figures import (
    FigureSpec,
    plot_convergence,
    plot_timing,
    plot_violations,
)

__version__ = "0.1.0"

__all__ = [
    "FigureSpec",
    "plot_convergence",
    "plot_timing",
    "plot_violations",
]
