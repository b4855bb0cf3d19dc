"""Render figures from discrimination-training CSV outputs."""

from .figures import (
    AggregateTable,
    FigureSpec,
    RenderResult,
    SchemaError,
    TraceSet,
    read_aggregate,
    read_traces,
    render_bound_figure,
    render_convergence_figure,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateTable",
    "FigureSpec",
    "RenderResult",
    "SchemaError",
    "TraceSet",
    "read_aggregate",
    "read_traces",
    "render_bound_figure",
    "render_convergence_figure",
    "__version__",
]
