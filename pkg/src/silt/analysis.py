"""Noise statistics over latency traces.

All statistics are pure functions of the delta sequence. Spreads are
kept as exact rationals (max/median and median/min of the observation
set), so they are unit-free and scale-invariant by construction: the
JSON output carries the rounded float plus the convention metadata.

Conventions, recorded in every summary: the median of an even-length
trace is the mean of the two central order statistics; quantiles use the
nearest-rank method; outlier classification is strict (delta < q_low or
delta > q_high).
"""

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

MEDIAN_METHOD = "mean-of-central-pair"
QUANTILE_METHOD = "nearest-rank"
LOW_QUANTILE = 0.0005
HIGH_QUANTILE = 0.9995


class OutlierClass(enum.IntEnum):
    NORMAL = 0
    LOW_EXTREME = 1
    HIGH_EXTREME = 2


def _as_int_array(deltas) -> np.ndarray:
    arr = np.asarray(deltas, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError("expected a one-dimensional delta sequence")
    return arr


def _nearest_rank(sorted_arr: np.ndarray, q: float) -> int:
    n = len(sorted_arr)
    rank = max(1, math.ceil(q * n))
    return int(sorted_arr[min(rank, n) - 1])


def _median_fraction(sorted_arr: np.ndarray) -> Fraction:
    n = len(sorted_arr)
    mid = n // 2
    if n % 2:
        return Fraction(int(sorted_arr[mid]))
    return Fraction(int(sorted_arr[mid - 1]) + int(sorted_arr[mid]), 2)


@dataclass(frozen=True)
class SpreadSummary:
    n: int
    min: int
    max: int
    median: Fraction
    max_spread: Fraction
    min_spread: Fraction
    q_low: int
    q_high: int

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "min": self.min,
            "max": self.max,
            "median": float(self.median),
            "max_spread": float(self.max_spread),
            "min_spread": float(self.min_spread),
            "q_low": self.q_low,
            "q_high": self.q_high,
            "median_method": MEDIAN_METHOD,
            "quantile_method": QUANTILE_METHOD,
        }


def spreads(deltas) -> SpreadSummary:
    """Median, extremes, and the max/med and med/min spread ratios."""
    arr = _as_int_array(deltas)
    if len(arr) == 0:
        raise ValueError("empty trace")
    if arr.min() <= 0:
        raise ValueError("all deltas must be positive")
    arr = np.sort(arr)
    median = _median_fraction(arr)
    lo = int(arr[0])
    hi = int(arr[-1])
    return SpreadSummary(
        n=len(arr),
        min=lo,
        max=hi,
        median=median,
        max_spread=Fraction(hi) / median,
        min_spread=median / Fraction(lo),
        q_low=_nearest_rank(arr, LOW_QUANTILE),
        q_high=_nearest_rank(arr, HIGH_QUANTILE),
    )


def sliding_mean(deltas, window: int = 1000) -> np.ndarray:
    """Mean over each full window of `window` consecutive deltas."""
    arr = _as_int_array(deltas)
    if window < 1:
        raise ValueError("window must be positive")
    if window > len(arr):
        raise ValueError(f"window {window} exceeds trace length {len(arr)}")
    csum = np.concatenate(([0], np.cumsum(arr, dtype=np.int64)))
    return (csum[window:] - csum[:-window]) / window


@dataclass(frozen=True)
class OutlierClassification:
    classes: np.ndarray  # uint8 per index, values of OutlierClass
    q_low: int
    q_high: int
    n_low: int
    n_high: int

    def __len__(self):
        return len(self.classes)

    @property
    def n_normal(self) -> int:
        return len(self.classes) - self.n_low - self.n_high


def classify_outliers(
    deltas, low: float = LOW_QUANTILE, high: float = HIGH_QUANTILE
) -> OutlierClassification:
    """Tag each delta as normal or low/high extreme against nearest-rank quantiles."""
    if not 0 <= low < high <= 1:
        raise ValueError("need 0 <= low < high <= 1")
    arr = _as_int_array(deltas)
    if len(arr) == 0:
        raise ValueError("empty trace")
    hist = np.sort(arr)
    q_low = _nearest_rank(hist, low)
    q_high = _nearest_rank(hist, high)
    classes = np.zeros(len(arr), dtype=np.uint8)
    low_mask = arr < q_low
    high_mask = arr > q_high
    classes[low_mask] = OutlierClass.LOW_EXTREME
    classes[high_mask] = OutlierClass.HIGH_EXTREME
    return OutlierClassification(
        classes=classes,
        q_low=q_low,
        q_high=q_high,
        n_low=int(low_mask.sum()),
        n_high=int(high_mask.sum()),
    )


@dataclass(frozen=True)
class Band:
    center: float
    mass: float


def detect_bands(deltas, bin_width: int, min_mass: float = 0.01) -> list[Band]:
    """Histogram peaks holding more than `min_mass` of all observations.

    Descriptive only: a band is a maximal run of equally-filled adjacent
    bins that stands strictly above its neighbours.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    arr = _as_int_array(deltas)
    if len(arr) == 0:
        return []
    base = int(arr.min())
    bins = {}
    for idx in ((arr - base) // bin_width).tolist():
        bins[idx] = bins.get(idx, 0) + 1
    total = len(arr)
    items = sorted(bins.items())
    bands = []
    i = 0
    while i < len(items):
        j = i
        while (
            j + 1 < len(items)
            and items[j + 1][0] == items[j][0] + 1
            and items[j + 1][1] == items[i][1]
        ):
            j += 1
        height = items[i][1]
        before_idx = items[i][0] - 1
        after_idx = items[j][0] + 1
        before = bins.get(before_idx, 0)
        after = bins.get(after_idx, 0)
        run_mass = height * (j - i + 1)
        if height > before and height > after and run_mass > min_mass * total:
            lo_edge = base + items[i][0] * bin_width
            hi_edge = base + (items[j][0] + 1) * bin_width
            bands.append(Band(center=(lo_edge + hi_edge) / 2, mass=run_mass / total))
        i = j + 1
    return sorted(bands, key=lambda b: b.center)


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    max_spread: Fraction
    min_spread: Fraction
    ratio_vs_load: Fraction | None

    def to_json(self):
        return {
            "label": self.label,
            "max_spread": float(self.max_spread),
            "min_spread": float(self.min_spread),
            "ratio_vs_load": None if self.ratio_vs_load is None else float(self.ratio_vs_load),
        }


@dataclass(frozen=True)
class ComparisonTable:
    rows: list

    def to_json(self):
        return {"baseline": "load", "rows": [r.to_json() for r in self.rows]}


def compare_scenarios(summaries: dict, baseline: str = "load") -> ComparisonTable:
    """Spread table across scenarios, noisiest first, ratios against `baseline`."""
    if len(summaries) < 2:
        raise ValueError("need at least two scenario summaries")
    base = summaries.get(baseline)
    rows = []
    for label, summary in summaries.items():
        ratio = None
        if base is not None:
            ratio = base.max_spread / summary.max_spread
        rows.append(
            ComparisonRow(
                label=label,
                max_spread=summary.max_spread,
                min_spread=summary.min_spread,
                ratio_vs_load=ratio,
            )
        )
    rows.sort(key=lambda r: r.max_spread, reverse=True)
    return ComparisonTable(rows=rows)


@dataclass(frozen=True)
class ImpactRow:
    kind: str
    baseline_ops_per_s: float
    ops_per_s: dict  # label -> float
    delta_pct: dict  # label -> float

    def to_json(self):
        return {
            "kind": self.kind,
            "baseline_ops_per_s": self.baseline_ops_per_s,
            "ops_per_s": self.ops_per_s,
            "delta_pct": self.delta_pct,
        }


@dataclass(frozen=True)
class ImpactTable:
    rows: list

    def to_json(self):
        return {"baseline": "load", "rows": [r.to_json() for r in self.rows]}


def tenant_impact(reports: dict, baseline: str = "load") -> ImpactTable:
    """Per-workload throughput deltas of each scenario against `baseline`."""
    if baseline not in reports:
        raise ValueError(f"baseline report {baseline!r} missing")
    kinds = None
    for label, report in reports.items():
        if kinds is None:
            kinds = report.kinds()
        elif report.kinds() != kinds:
            raise ValueError(
                f"workload kinds differ: {sorted(kinds)} vs {sorted(report.kinds())} ({label})"
            )
    base_rates = reports[baseline].ops_per_s_by_kind()
    rows = []
    for kind in sorted(kinds):
        base_rate = base_rates.get(kind, 0.0)
        rates = {}
        deltas = {}
        for label, report in reports.items():
            rate = report.ops_per_s_by_kind().get(kind, 0.0)
            rates[label] = rate
            deltas[label] = (rate - base_rate) / base_rate * 100.0 if base_rate else 0.0
        rows.append(
            ImpactRow(kind=kind, baseline_ops_per_s=base_rate, ops_per_s=rates, delta_pct=deltas)
        )
    return ImpactTable(rows=rows)
