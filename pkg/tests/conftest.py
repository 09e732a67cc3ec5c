"""Shared fixtures and event builders for the test suite."""

import random

import pytest
from hypothesis import strategies as st

from silt.engine import (
    LineitemRow,
    OrderbookEvent,
    PartsuppRow,
    SCALE,
    Side,
    SupplierRow,
)
from silt.engine.views import QueryId

# Value ranges mirror the generator's; products stay far inside 64 bits
# even summed over half a million events.
VOL_MAX = 500 * SCALE
PRICE_MAX = 2500 * SCALE


def random_orderbook(rng: random.Random, i: int = 0) -> OrderbookEvent:
    # a small price pool now and then exercises duplicate tree keys
    price = rng.choice((100 * SCALE, 1500 * SCALE)) if rng.random() < 0.2 else rng.randint(0, PRICE_MAX)
    return OrderbookEvent(
        t=i,
        id=i,
        broker_id=rng.randint(1, 5),
        volume=rng.randint(0, VOL_MAX),
        price=price,
        side=Side.BID if rng.random() < 0.5 else Side.ASK,
    )


def random_lineitem(rng: random.Random, i: int = 0) -> LineitemRow:
    return LineitemRow(
        quantity=rng.randint(0, 60) * SCALE,
        extendedprice=rng.randint(0, 120_000 * SCALE),
        discount=rng.randint(0, 10) * 100,
        tax=rng.randint(0, 8) * 100,
        returnflag=rng.choice("ANR"),
        linestatus=rng.choice("OF"),
        shipdate=rng.randint(8000, 10900),  # straddles every predicate boundary
    )


def random_partsupp_supplier(rng: random.Random, i: int = 0):
    if rng.random() < 0.3:
        return SupplierRow(suppkey=rng.randint(1, 8))
    return PartsuppRow(
        partkey=rng.randint(1, 12),
        suppkey=rng.randint(1, 8),
        supplycost=rng.randint(0, 1000 * SCALE),
        availqty=rng.randint(0, 99),
    )


EVENT_BUILDERS = {
    QueryId.C1: random_orderbook,
    QueryId.AXF: random_orderbook,
    QueryId.PSP: random_orderbook,
    QueryId.Q1: random_lineitem,
    QueryId.Q6: random_lineitem,
    QueryId.Q11A: random_partsupp_supplier,
}


def random_stream(query_id: QueryId, length: int, seed: int) -> list:
    rng = random.Random(seed)
    build = EVENT_BUILDERS[query_id]
    return [build(rng, i) for i in range(length)]


orderbook_events = st.builds(
    OrderbookEvent,
    t=st.integers(0, 10**6),
    id=st.integers(0, 10**6),
    broker_id=st.integers(1, 4),
    volume=st.integers(0, VOL_MAX),
    price=st.one_of(st.integers(0, PRICE_MAX), st.sampled_from([0, 100 * SCALE, 1500 * SCALE])),
    side=st.sampled_from(Side),
)

lineitem_rows = st.builds(
    LineitemRow,
    quantity=st.integers(0, 60 * SCALE),
    extendedprice=st.integers(0, 120_000 * SCALE),
    discount=st.integers(0, 1000),
    tax=st.integers(0, 800),
    returnflag=st.sampled_from("ANR"),
    linestatus=st.sampled_from("OF"),
    shipdate=st.integers(8000, 10900),
)

partsupp_supplier_events = st.one_of(
    st.builds(SupplierRow, suppkey=st.integers(1, 6)),
    st.builds(
        PartsuppRow,
        partkey=st.integers(1, 10),
        suppkey=st.integers(1, 6),
        supplycost=st.integers(0, 1000 * SCALE),
        availqty=st.integers(0, 99),
    ),
)

STREAM_STRATEGIES = {
    QueryId.C1: orderbook_events,
    QueryId.AXF: orderbook_events,
    QueryId.PSP: orderbook_events,
    QueryId.Q1: lineitem_rows,
    QueryId.Q6: lineitem_rows,
    QueryId.Q11A: partsupp_supplier_events,
}


@pytest.fixture
def tmp_path_str(tmp_path):
    return str(tmp_path)
