"""Incrementally maintained views for the six benchmark queries.

Each view consumes one input tuple at a time and keeps its result
current after every insert; `snapshot()` must always equal a batch
re-evaluation of the query over everything applied so far. Streams are
insert-only.

The `ops` property counts elementary index operations (dict touches,
tree node visits). Reading it through a fake clock turns a measurement
trial into a per-event work profile, which is how the amortized-cost and
O(log n) maintenance properties are checked.
"""

import datetime
import enum

from .events import LineitemRow, OrderbookEvent, PartsuppRow, Side, SupplierRow
from .fixedpoint import SCALE, check64, fp_div_by_count, fp_mul
from .ostree import OpsCount, OrderStatTree


class QueryId(enum.Enum):
    C1 = "c1"
    AXF = "axfinder"
    PSP = "pricespread"
    Q1 = "q1"
    Q6 = "q6"
    Q11A = "q11a"


class EngineError(Exception):
    pass


class TypeMismatchError(EngineError):
    """Event row type does not match the query's input relations."""


def _days(y, m, d):
    return datetime.date(y, m, d).toordinal() - datetime.date(1970, 1, 1).toordinal()


# Price gap in the arbitrage predicate: literal 1000 in query units.
ARBITRAGE_PRICE_GAP = 1000 * SCALE

# Revenue-band predicate constants (shipdate window upper bound exclusive,
# discount band inclusive both ends, quantity bound strict).
REVENUE_SHIP_LO = _days(1994, 1, 1)
REVENUE_SHIP_HI = _days(1995, 1, 1)
REVENUE_DISC_LO = 500
REVENUE_DISC_HI = 700
REVENUE_QTY_LIMIT = 24 * SCALE

# Pricing-summary predicate constant (inclusive).
SUMMARY_SHIP_LIMIT = _days(1997, 9, 1)


class View:
    """Base class: event type checking and the shared op counter."""

    query_id: QueryId
    accepts: tuple[type, ...]

    def __init__(self):
        self._ops = OpsCount()

    @property
    def ops(self) -> int:
        return self._ops.n

    def _check(self, event):
        if not isinstance(event, self.accepts):
            raise TypeMismatchError(
                f"{self.query_id.value} cannot consume {type(event).__name__}"
            )

    def apply(self, event) -> None:
        raise NotImplementedError

    def snapshot(self):
        raise NotImplementedError


class TupleCountView(View):
    """Counts every inserted tuple; refreshed per insert."""

    query_id = QueryId.C1
    accepts = (OrderbookEvent,)

    def __init__(self):
        super().__init__()
        self._count = 0

    def apply(self, event):
        self._check(event)
        self._count += 1
        self._ops.n += 1

    def snapshot(self) -> int:
        return self._count


class DiscountedRevenueView(View):
    """Sum of extendedprice*discount over a shipdate/discount/quantity band."""

    query_id = QueryId.Q6
    accepts = (LineitemRow,)

    def __init__(self):
        super().__init__()
        self._revenue = 0

    def apply(self, event):
        self._check(event)
        self._ops.n += 1
        if (
            REVENUE_SHIP_LO <= event.shipdate < REVENUE_SHIP_HI
            and REVENUE_DISC_LO <= event.discount <= REVENUE_DISC_HI
            and event.quantity < REVENUE_QTY_LIMIT
        ):
            self._revenue = check64(self._revenue + fp_mul(event.extendedprice, event.discount))
            self._ops.n += 1

    def snapshot(self) -> int:
        return self._revenue


class PricingSummaryView(View):
    """Per (returnflag, linestatus) running sums; averages derived on read."""

    query_id = QueryId.Q1
    accepts = (LineitemRow,)

    def __init__(self):
        super().__init__()
        # group -> [count, sum_qty, sum_base, sum_disc_price, sum_charge, sum_disc]
        self._groups: dict[tuple[str, str], list[int]] = {}

    def apply(self, event):
        self._check(event)
        self._ops.n += 1
        if event.shipdate > SUMMARY_SHIP_LIMIT:
            return
        disc_price = fp_mul(event.extendedprice, SCALE - event.discount)
        charge = fp_mul(disc_price, SCALE + event.tax)
        g = self._groups.get((event.returnflag, event.linestatus))
        if g is None:
            g = [0, 0, 0, 0, 0, 0]
            self._groups[(event.returnflag, event.linestatus)] = g
        g[0] += 1
        g[1] = check64(g[1] + event.quantity)
        g[2] = check64(g[2] + event.extendedprice)
        g[3] = check64(g[3] + disc_price)
        g[4] = check64(g[4] + charge)
        g[5] = check64(g[5] + event.discount)
        self._ops.n += 1

    def snapshot(self) -> dict:
        out = {}
        for key, (n, qty, base, disc_price, charge, disc) in self._groups.items():
            out[key] = (
                qty,
                base,
                disc_price,
                charge,
                fp_div_by_count(qty, n),
                fp_div_by_count(base, n),
                fp_div_by_count(disc, n),
                n,
            )
        return out


class SupplierPartValueView(View):
    """Per-part total of supplycost*availqty joined against suppliers."""

    query_id = QueryId.Q11A
    accepts = (PartsuppRow, SupplierRow)

    def __init__(self):
        super().__init__()
        self._supplier_mult: dict[int, int] = {}
        self._parts_by_supp: dict[int, list[tuple[int, int]]] = {}
        self._groups: dict[int, list[int]] = {}  # partkey -> [pair_count, total]

    def _bump(self, partkey, pairs, value):
        g = self._groups.get(partkey)
        if g is None:
            g = [0, 0]
            self._groups[partkey] = g
        g[0] += pairs
        g[1] = check64(g[1] + value)
        self._ops.n += 1

    def apply(self, event):
        self._check(event)
        self._ops.n += 1
        if isinstance(event, SupplierRow):
            self._supplier_mult[event.suppkey] = self._supplier_mult.get(event.suppkey, 0) + 1
            for partkey, value in self._parts_by_supp.get(event.suppkey, ()):
                self._bump(partkey, 1, value)
        else:
            value = check64(event.supplycost * event.availqty)
            mult = self._supplier_mult.get(event.suppkey, 0)
            if mult:
                self._bump(event.partkey, mult, check64(mult * value))
            self._parts_by_supp.setdefault(event.suppkey, []).append((event.partkey, value))
            self._ops.n += 1

    def snapshot(self) -> dict:
        return {pk: total for pk, (pairs, total) in self._groups.items() if pairs > 0}


class _BrokerBook:
    __slots__ = ("bids", "asks")

    def __init__(self, seed, counter):
        self.bids = OrderStatTree(seed, counter)
        self.asks = OrderStatTree(seed + 1, counter)


class BrokerArbitrageView(View):
    """Per-broker volume imbalance over bid/ask pairs with a wide price gap.

    For each broker keep bids and asks in price-keyed augmented trees.
    A new ask pairs with every already-seen bid of the same broker whose
    price lies strictly outside [price-gap, price+gap]; each pair adds
    ask.volume - bid.volume to the broker's group. A new bid does the
    mirror image. Two range-aggregate walks make the delta O(log n).
    """

    query_id = QueryId.AXF
    accepts = (OrderbookEvent,)

    def __init__(self, tree_seed: int = 0):
        super().__init__()
        self._tree_seed = tree_seed
        self._books: dict[int, _BrokerBook] = {}
        self._groups: dict[int, list[int]] = {}  # broker -> [pair_count, vol_sum]

    def apply(self, event):
        self._check(event)
        self._ops.n += 1
        book = self._books.get(event.broker_id)
        if book is None:
            book = _BrokerBook(self._tree_seed + 2 * event.broker_id, self._ops)
            self._books[event.broker_id] = book
        lo = event.price - ARBITRAGE_PRICE_GAP
        hi = event.price + ARBITRAGE_PRICE_GAP
        if event.side is Side.ASK:
            cnt_l, vol_l = book.bids.agg_less(lo)
            cnt_g, vol_g = book.bids.agg_greater(hi)
            cnt = cnt_l + cnt_g
            delta = check64(cnt * event.volume) - (vol_l + vol_g)
            book.asks.insert(event.price, event.volume)
        else:
            cnt_l, vol_l = book.asks.agg_less(lo)
            cnt_g, vol_g = book.asks.agg_greater(hi)
            cnt = cnt_l + cnt_g
            delta = (vol_l + vol_g) - check64(cnt * event.volume)
            book.bids.insert(event.price, event.volume)
        if cnt:
            g = self._groups.get(event.broker_id)
            if g is None:
                g = [0, 0]
                self._groups[event.broker_id] = g
            g[0] += cnt
            g[1] = check64(g[1] + delta)

    def snapshot(self) -> dict:
        return {broker: total for broker, (pairs, total) in self._groups.items() if pairs > 0}


class PriceSpreadView(View):
    """Sum of price spreads between high-volume bids and asks.

    A row qualifies when its volume strictly exceeds 0.0001 of its own
    relation's volume total; in scaled integers that is
    volume * SCALE > total, i.e. volume >= total // SCALE + 1. Both
    relations keep a volume-keyed tree with price sums so the qualifying
    count and price mass come from one suffix aggregate each, and the
    result is |QB| * sum(QA prices) - |QA| * sum(QB prices).
    """

    query_id = QueryId.PSP
    accepts = (OrderbookEvent,)

    def __init__(self, tree_seed: int = 0):
        super().__init__()
        self._bids = OrderStatTree(tree_seed, self._ops)
        self._asks = OrderStatTree(tree_seed + 1, self._ops)
        self._bid_total = 0
        self._ask_total = 0
        self._value = 0

    def apply(self, event):
        self._check(event)
        self._ops.n += 1
        if event.side is Side.BID:
            self._bids.insert(event.volume, event.price)
            self._bid_total = check64(self._bid_total + event.volume)
        else:
            self._asks.insert(event.volume, event.price)
            self._ask_total = check64(self._ask_total + event.volume)
        cnt_b, price_b = self._bids.agg_at_least(self._bid_total // SCALE + 1)
        cnt_a, price_a = self._asks.agg_at_least(self._ask_total // SCALE + 1)
        self._value = check64(check64(cnt_b * price_a) - check64(cnt_a * price_b))

    def snapshot(self) -> int:
        return self._value


_VIEW_TYPES = {
    QueryId.C1: TupleCountView,
    QueryId.Q6: DiscountedRevenueView,
    QueryId.Q1: PricingSummaryView,
    QueryId.Q11A: SupplierPartValueView,
}


def make_view(query_id: QueryId, tree_seed: int = 0) -> View:
    """Construct a fresh view; tree_seed fixes treap shapes for reproducibility."""
    if query_id is QueryId.AXF:
        return BrokerArbitrageView(tree_seed)
    if query_id is QueryId.PSP:
        return PriceSpreadView(tree_seed)
    return _VIEW_TYPES[query_id]()
