from .data import DataBounds, Dataset, Example
from .trace import TRACE_HEADER, IterationRecord, TraceRow

__all__ = [
    "DataBounds",
    "Dataset",
    "Example",
    "IterationRecord",
    "TraceRow",
    "TRACE_HEADER",
]
