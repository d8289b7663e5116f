"""Batch figure rendering for formation-simulation CSV outputs."""

from .figures import KINDS, FigureSpec, build_figure, render
from .reader import RunData, SchemaError, euler_zyx, read_run

__version__ = "0.1.0"

__all__ = [
    "KINDS",
    "FigureSpec",
    "RunData",
    "SchemaError",
    "build_figure",
    "euler_zyx",
    "read_run",
    "render",
]
