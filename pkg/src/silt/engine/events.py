"""Input event types for the streaming queries.

Every numeric field that carries money, volume or quantity is a scaled
fixed-point integer (see fixedpoint.SCALE); dates are days since
1970-01-01.
"""

import datetime
import enum
from dataclasses import dataclass

from .fixedpoint import check64


class Side(enum.Enum):
    BID = "BID"
    ASK = "ASK"


def days_since_epoch(d: datetime.date) -> int:
    return d.toordinal() - datetime.date(1970, 1, 1).toordinal()


@dataclass(frozen=True, slots=True)
class OrderbookEvent:
    t: int          # event time, fixed-point seconds
    id: int         # order id
    broker_id: int
    volume: int     # fixed-point
    price: int      # fixed-point money
    side: Side

    def __post_init__(self):
        if self.volume < 0 or self.price < 0:
            raise ValueError("volume and price must be non-negative")
        check64(self.volume)
        check64(self.price)


@dataclass(frozen=True, slots=True)
class LineitemRow:
    quantity: int       # fixed-point
    extendedprice: int  # fixed-point money
    discount: int       # fixed-point fraction
    tax: int            # fixed-point fraction
    returnflag: str
    linestatus: str
    shipdate: int       # days since epoch

    def __post_init__(self):
        if self.quantity < 0 or self.extendedprice < 0:
            raise ValueError("quantity and extendedprice must be non-negative")
        if len(self.returnflag) != 1 or len(self.linestatus) != 1:
            raise ValueError("returnflag/linestatus must be single characters")
        check64(self.quantity)
        check64(self.extendedprice)


@dataclass(frozen=True, slots=True)
class PartsuppRow:
    partkey: int
    suppkey: int
    supplycost: int  # fixed-point money
    availqty: int    # plain count

    def __post_init__(self):
        if self.availqty < 0 or self.supplycost < 0:
            raise ValueError("availqty and supplycost must be non-negative")
        check64(self.supplycost)


@dataclass(frozen=True, slots=True)
class SupplierRow:
    suppkey: int


Event = OrderbookEvent | LineitemRow | PartsuppRow | SupplierRow
