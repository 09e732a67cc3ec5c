"""Batch re-evaluation of the six queries over a full event list.

This is the differential-testing reference: no incremental state, no
trees, every call recomputes from scratch. The two join queries
enumerate all candidate pairs; numpy does the enumeration so per-prefix
sweeps over thousands of events stay affordable, but the arithmetic is
plain int64 and exact (values stay far below 2^63 for generator-range
data).

Only tests consume this module.
"""

import numpy as np

from .events import LineitemRow, OrderbookEvent, PartsuppRow, Side, SupplierRow
from .fixedpoint import SCALE, check64, fp_div_by_count, fp_mul
from .views import (
    ARBITRAGE_PRICE_GAP,
    QueryId,
    REVENUE_DISC_HI,
    REVENUE_DISC_LO,
    REVENUE_QTY_LIMIT,
    REVENUE_SHIP_HI,
    REVENUE_SHIP_LO,
    SUMMARY_SHIP_LIMIT,
    TypeMismatchError,
)


def _require(events, types, query_id):
    for e in events:
        if not isinstance(e, types):
            raise TypeMismatchError(f"{query_id.value} cannot consume {type(e).__name__}")


def _count_all(events):
    return len(events)


def _banded_revenue(events):
    total = 0
    for e in events:
        if (
            REVENUE_SHIP_LO <= e.shipdate < REVENUE_SHIP_HI
            and REVENUE_DISC_LO <= e.discount <= REVENUE_DISC_HI
            and e.quantity < REVENUE_QTY_LIMIT
        ):
            total = check64(total + fp_mul(e.extendedprice, e.discount))
    return total


def _pricing_summary(events):
    groups = {}
    for e in events:
        if e.shipdate > SUMMARY_SHIP_LIMIT:
            continue
        g = groups.setdefault((e.returnflag, e.linestatus), [0, 0, 0, 0, 0, 0])
        disc_price = fp_mul(e.extendedprice, SCALE - e.discount)
        g[0] += 1
        g[1] += e.quantity
        g[2] += e.extendedprice
        g[3] += disc_price
        g[4] += fp_mul(disc_price, SCALE + e.tax)
        g[5] += e.discount
    return {
        key: (
            qty,
            base,
            disc_price,
            charge,
            fp_div_by_count(qty, n),
            fp_div_by_count(base, n),
            fp_div_by_count(disc, n),
            n,
        )
        for key, (n, qty, base, disc_price, charge, disc) in groups.items()
    }


def _supplier_part_value(events):
    supplier_mult = {}
    for e in events:
        if isinstance(e, SupplierRow):
            supplier_mult[e.suppkey] = supplier_mult.get(e.suppkey, 0) + 1
    groups = {}
    for e in events:
        if isinstance(e, PartsuppRow):
            mult = supplier_mult.get(e.suppkey, 0)
            if mult:
                g = groups.setdefault(e.partkey, [0, 0])
                g[0] += mult
                g[1] += mult * e.supplycost * e.availqty
    return {pk: check64(total) for pk, (pairs, total) in groups.items() if pairs > 0}


def _broker_arbitrage(events):
    by_broker = {}
    for e in events:
        bids, asks = by_broker.setdefault(e.broker_id, ([], []))
        (bids if e.side is Side.BID else asks).append((e.volume, e.price))
    result = {}
    for broker, (bids, asks) in by_broker.items():
        if not bids or not asks:
            continue
        bv = np.array([v for v, _ in bids], dtype=np.int64)
        bp = np.array([p for _, p in bids], dtype=np.int64)
        av = np.array([v for v, _ in asks], dtype=np.int64)
        ap = np.array([p for _, p in asks], dtype=np.int64)
        # all (ask, bid) pairs with a price gap beyond the threshold
        gap = ap[:, None] - bp[None, :]
        mask = (gap > ARBITRAGE_PRICE_GAP) | (gap < -ARBITRAGE_PRICE_GAP)
        pairs = int(mask.sum())
        if pairs == 0:
            continue
        diff = av[:, None] - bv[None, :]
        result[broker] = check64(int(diff[mask].sum()))
    return result


def _price_spread(events):
    bids = [(e.volume, e.price) for e in events if e.side is Side.BID]
    asks = [(e.volume, e.price) for e in events if e.side is Side.ASK]
    if not bids or not asks:
        return 0
    bv = np.array([v for v, _ in bids], dtype=np.int64)
    bp = np.array([p for _, p in bids], dtype=np.int64)
    av = np.array([v for v, _ in asks], dtype=np.int64)
    ap = np.array([p for _, p in asks], dtype=np.int64)
    # strict predicate, cross-multiplied to stay in integers
    qb = bp[bv * SCALE > int(bv.sum())]
    qa = ap[av * SCALE > int(av.sum())]
    if qb.size == 0 or qa.size == 0:
        return 0
    spread = qa[:, None] - qb[None, :]
    return check64(int(spread.sum()))


def evaluate_oracle(query_id: QueryId, events) -> int | dict:
    """Batch-evaluate `query_id` over `events`; deterministic, stateless."""
    events = list(events)
    if query_id in (QueryId.C1, QueryId.AXF, QueryId.PSP):
        _require(events, (OrderbookEvent,), query_id)
    elif query_id in (QueryId.Q1, QueryId.Q6):
        _require(events, (LineitemRow,), query_id)
    else:
        _require(events, (PartsuppRow, SupplierRow), query_id)

    if query_id is QueryId.C1:
        return _count_all(events)
    if query_id is QueryId.Q6:
        return _banded_revenue(events)
    if query_id is QueryId.Q1:
        return _pricing_summary(events)
    if query_id is QueryId.Q11A:
        return _supplier_part_value(events)
    if query_id is QueryId.AXF:
        return _broker_arbitrage(events)
    return _price_spread(events)
