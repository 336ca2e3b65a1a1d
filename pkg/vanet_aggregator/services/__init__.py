"""
Service modules for business logic.
"""

from .analysis_service import cell_summary, probability_rows, sizing_rows
from .sweep_service import archive_runs, bench_rows, simulate, summarize, sweep

__all__ = [
    "cell_summary",
    "probability_rows",
    "sizing_rows",
    "archive_runs",
    "simulate",
    "summarize",
    "sweep",
    "bench_rows",
]
