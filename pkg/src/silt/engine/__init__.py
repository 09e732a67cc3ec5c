"""Incremental view maintenance for the six benchmark queries."""

from .events import (
    Event,
    LineitemRow,
    OrderbookEvent,
    PartsuppRow,
    Side,
    SupplierRow,
    days_since_epoch,
)
from .fixedpoint import (
    SCALE,
    FixedPointOverflowError,
    format_fixed,
    fp_mul,
    parse_fixed,
)
from .oracle import evaluate_oracle
from .views import EngineError, QueryId, TypeMismatchError, View, make_view

__all__ = [
    "Event",
    "LineitemRow",
    "OrderbookEvent",
    "PartsuppRow",
    "Side",
    "SupplierRow",
    "days_since_epoch",
    "SCALE",
    "FixedPointOverflowError",
    "format_fixed",
    "fp_mul",
    "parse_fixed",
    "evaluate_oracle",
    "EngineError",
    "QueryId",
    "TypeMismatchError",
    "View",
    "make_view",
]
