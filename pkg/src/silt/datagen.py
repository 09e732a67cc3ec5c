"""Deterministic synthetic streams and CSV ingestion.

Streams are a pure function of (schema, base_count, seed): a base list is
drawn once and replayed `iterations` times in order. Replaying repeats
timestamps and ids, which is harmless because no query predicate touches
them.

CSV formats (UTF-8, LF, '.' decimal separator, no header):
  finance:            t,id,broker_id,volume,price,side
  lineitem:           quantity,extendedprice,discount,tax,returnflag,linestatus,shipdate
  partsupp_supplier:  P,partkey,suppkey,supplycost,availqty  |  S,suppkey
Dates are ISO (YYYY-MM-DD); decimals carry at most four fractional digits.
"""

import datetime
import enum
import random
from dataclasses import dataclass

from .engine import (
    Event,
    LineitemRow,
    OrderbookEvent,
    PartsuppRow,
    SCALE,
    Side,
    SupplierRow,
    days_since_epoch,
)
from .engine.fixedpoint import format_fixed, parse_fixed


class Schema(enum.Enum):
    FINANCE = "finance"
    LINEITEM = "lineitem"
    PARTSUPP_SUPPLIER = "partsupp-supplier"


class CsvFormatError(ValueError):
    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


@dataclass(frozen=True)
class StreamSpec:
    schema: Schema
    base_count: int
    seed: int
    iterations: int = 1

    def __post_init__(self):
        if self.base_count <= 0:
            raise ValueError("base_count must be positive")
        if self.iterations <= 0:
            raise ValueError("iterations must be positive")

    @property
    def total_events(self) -> int:
        return self.base_count * self.iterations


# Generator value ranges (scaled). The price band is wide enough that the
# arbitrage gap predicate fires for a nontrivial share of pairs.
_BROKERS = 10
_VOLUME_LO, _VOLUME_HI = 1 * SCALE, 1000 * SCALE
_PRICE_LO, _PRICE_HI = 1 * SCALE, 3000 * SCALE
_QTY_LO, _QTY_HI = 1, 50
_EP_LO, _EP_HI = 900 * SCALE, 105_000 * SCALE
_SHIP_LO = days_since_epoch(datetime.date(1992, 1, 2))
_SHIP_HI = days_since_epoch(datetime.date(1998, 12, 1))
_PARTKEYS = 200
_SUPPKEYS = 50
_COST_LO, _COST_HI = 1 * SCALE, 1000 * SCALE
_AVAILQTY_HI = 9999


def _gen_finance(n, rng):
    events = []
    for i in range(n):
        events.append(
            OrderbookEvent(
                t=(i + 1) * 10,  # 1 ms steps in fixed-point seconds
                id=i + 1,
                broker_id=rng.randint(1, _BROKERS),
                volume=rng.randint(_VOLUME_LO, _VOLUME_HI),
                price=rng.randint(_PRICE_LO, _PRICE_HI),
                side=Side.BID if i % 2 == 0 else Side.ASK,
            )
        )
    return events


def _gen_lineitem(n, rng):
    events = []
    for _ in range(n):
        events.append(
            LineitemRow(
                quantity=rng.randint(_QTY_LO, _QTY_HI) * SCALE,
                extendedprice=rng.randint(_EP_LO, _EP_HI),
                discount=rng.randint(0, 10) * 100,
                tax=rng.randint(0, 8) * 100,
                returnflag=rng.choice("ANR"),
                linestatus=rng.choice("OF"),
                shipdate=rng.randint(_SHIP_LO, _SHIP_HI),
            )
        )
    return events


def _gen_partsupp_supplier(n, rng):
    events = []
    for _ in range(n):
        if rng.random() < 0.25:
            events.append(SupplierRow(suppkey=rng.randint(1, _SUPPKEYS)))
        else:
            events.append(
                PartsuppRow(
                    partkey=rng.randint(1, _PARTKEYS),
                    suppkey=rng.randint(1, _SUPPKEYS),
                    supplycost=rng.randint(_COST_LO, _COST_HI),
                    availqty=rng.randint(0, _AVAILQTY_HI),
                )
            )
    return events


_GENERATORS = {
    Schema.FINANCE: _gen_finance,
    Schema.LINEITEM: _gen_lineitem,
    Schema.PARTSUPP_SUPPLIER: _gen_partsupp_supplier,
}


def generate(spec: StreamSpec) -> list[Event]:
    """Materialize the stream for `spec`: base list replayed in order."""
    rng = random.Random(spec.seed)
    base = _GENERATORS[spec.schema](spec.base_count, rng)
    return base * spec.iterations


def _format_event(event) -> str:
    if isinstance(event, OrderbookEvent):
        return ",".join(
            (
                format_fixed(event.t),
                str(event.id),
                str(event.broker_id),
                format_fixed(event.volume),
                format_fixed(event.price),
                event.side.value,
            )
        )
    if isinstance(event, LineitemRow):
        iso = datetime.date(1970, 1, 1) + datetime.timedelta(days=event.shipdate)
        return ",".join(
            (
                format_fixed(event.quantity),
                format_fixed(event.extendedprice),
                format_fixed(event.discount),
                format_fixed(event.tax),
                event.returnflag,
                event.linestatus,
                iso.isoformat(),
            )
        )
    if isinstance(event, PartsuppRow):
        return ",".join(
            (
                "P",
                str(event.partkey),
                str(event.suppkey),
                format_fixed(event.supplycost),
                str(event.availqty),
            )
        )
    return f"S,{event.suppkey}"


def write_csv(events, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for event in events:
            fh.write(_format_event(event))
            fh.write("\n")


def _parse_finance(fields):
    t, oid, broker, volume, price, side = fields
    if side not in ("BID", "ASK"):
        raise ValueError(f"unknown side {side!r}")
    return OrderbookEvent(
        t=parse_fixed(t),
        id=int(oid),
        broker_id=int(broker),
        volume=parse_fixed(volume),
        price=parse_fixed(price),
        side=Side[side],
    )


def _parse_lineitem(fields):
    qty, ep, disc, tax, flag, status, ship = fields
    return LineitemRow(
        quantity=parse_fixed(qty),
        extendedprice=parse_fixed(ep),
        discount=parse_fixed(disc),
        tax=parse_fixed(tax),
        returnflag=flag,
        linestatus=status,
        shipdate=days_since_epoch(datetime.date.fromisoformat(ship)),
    )


def _parse_partsupp_supplier(fields):
    tag = fields[0]
    if tag == "P":
        if len(fields) != 5:
            raise ValueError(f"expected 5 columns for partsupp row, got {len(fields)}")
        return PartsuppRow(
            partkey=int(fields[1]),
            suppkey=int(fields[2]),
            supplycost=parse_fixed(fields[3]),
            availqty=int(fields[4]),
        )
    if tag == "S":
        if len(fields) != 2:
            raise ValueError(f"expected 2 columns for supplier row, got {len(fields)}")
        return SupplierRow(suppkey=int(fields[1]))
    raise ValueError(f"unknown row tag {tag!r}")


_COLUMN_COUNTS = {Schema.FINANCE: 6, Schema.LINEITEM: 7}
_PARSERS = {
    Schema.FINANCE: _parse_finance,
    Schema.LINEITEM: _parse_lineitem,
    Schema.PARTSUPP_SUPPLIER: _parse_partsupp_supplier,
}


def load_csv(path, schema: Schema) -> list[Event]:
    """Parse a stream file; malformed or out-of-range rows fail with a line number."""
    parser = _PARSERS[schema]
    expected = _COLUMN_COUNTS.get(schema)
    events = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(",")
            if expected is not None and len(fields) != expected:
                raise CsvFormatError(
                    path, line_no, f"expected {expected} columns, got {len(fields)}"
                )
            try:
                events.append(parser(fields))
            except (ValueError, KeyError) as exc:
                raise CsvFormatError(path, line_no, str(exc)) from exc
    return events
