"""Spread metrics, sliding means, outlier classes, bands, comparisons.

The brute-force references here are deliberately naive (sort + index
arithmetic) and independent of the numpy implementations they check.
"""

import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from silt import analysis
from silt.analysis import (
    OutlierClass,
    classify_outliers,
    compare_scenarios,
    detect_bands,
    sliding_mean,
    spreads,
    tenant_impact,
)
from silt.load import LoadConfig, TenantCell, TenantReport


def brute_spreads(deltas):
    xs = sorted(deltas)
    n = len(xs)
    med = Fraction(xs[n // 2]) if n % 2 else Fraction(xs[n // 2 - 1] + xs[n // 2], 2)
    return med, Fraction(xs[-1]) / med, med / Fraction(xs[0])


def brute_quantile(deltas, q):
    xs = sorted(deltas)
    rank = max(1, math.ceil(q * len(xs)))
    return xs[rank - 1]


class TestSpreads:
    def test_constant_trace(self):
        s = spreads([10, 10, 10])
        assert s.median == 10
        assert s.max_spread == 1
        assert s.min_spread == 1

    def test_worked_example(self):
        s = spreads([1, 2, 3, 4, 100])
        assert s.median == 3
        assert s.max_spread == Fraction(100, 3)
        assert s.min_spread == 3
        assert float(s.max_spread) == 100 / 3

    def test_scale_invariance(self):
        base = [3, 7, 1, 9, 4, 4]
        a = spreads(base)
        b = spreads([x * 1000 for x in base])
        assert a.max_spread == b.max_spread
        assert a.min_spread == b.min_spread

    def test_invariant_ordering(self):
        s = spreads([5, 1, 9, 2, 2, 8])
        assert s.min <= s.q_low <= s.median <= s.q_high <= s.max
        assert s.max_spread >= 1 and s.min_spread >= 1

    def test_empty_and_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            spreads([])
        with pytest.raises(ValueError):
            spreads([1, 0, 2])

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(1, 10**12), min_size=1, max_size=300))
    def test_matches_brute_force(self, deltas):
        s = spreads(deltas)
        med, mx, mn = brute_spreads(deltas)
        assert (s.median, s.max_spread, s.min_spread) == (med, mx, mn)
        assert s.q_low == brute_quantile(deltas, 0.0005)
        assert s.q_high == brute_quantile(deltas, 0.9995)

    def test_matches_brute_force_large(self):
        rng = random.Random(42)
        deltas = [rng.randint(1, 10**9) for _ in range(1_000_000)]
        s = spreads(deltas)
        med, mx, mn = brute_spreads(deltas)
        assert (s.median, s.max_spread, s.min_spread) == (med, mx, mn)


class TestSlidingMean:
    def test_constant(self):
        assert sliding_mean([5] * 10, 3).tolist() == [5.0] * 8

    def test_window_equals_length(self):
        series = sliding_mean([1, 2, 3, 4], 4)
        assert series.tolist() == [2.5]

    def test_worked_example(self):
        assert sliding_mean([1, 2, 3, 4], 2).tolist() == [1.5, 2.5, 3.5]

    def test_window_too_large(self):
        with pytest.raises(ValueError):
            sliding_mean([1, 2], 3)


class TestOutliers:
    def test_constant_has_no_extremes(self):
        c = classify_outliers([7] * 1000)
        assert c.n_low == 0 and c.n_high == 0

    def test_single_huge_value_is_high_extreme(self):
        deltas = [10] * 9999 + [1000]
        c = classify_outliers(deltas)
        assert c.classes[-1] == OutlierClass.HIGH_EXTREME
        assert c.n_high == 1

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(1, 10**9), min_size=1, max_size=400))
    def test_fraction_bounds(self, deltas):
        c = classify_outliers(deltas)
        n = len(deltas)
        assert c.n_low <= 0.0005 * n + 1
        assert c.n_high <= 0.0005 * n + 1
        assert c.q_low == brute_quantile(deltas, 0.0005)
        assert c.q_high == brute_quantile(deltas, 0.9995)


class TestBands:
    def test_bimodal_two_bands(self):
        deltas = [10] * 500 + [90] * 500
        bands = detect_bands(deltas, bin_width=5)
        assert len(bands) == 2
        assert bands[0].center < bands[1].center

    def test_constant_single_band(self):
        bands = detect_bands([42] * 100, bin_width=5)
        assert len(bands) == 1
        assert bands[0].mass == 1.0

    def test_small_mass_ignored(self):
        deltas = [10] * 990 + [500] * 5  # 0.5% < 1% mass floor
        assert len(detect_bands(deltas, bin_width=3)) == 1

    def test_bad_bin_width(self):
        with pytest.raises(ValueError):
            detect_bands([1], 0)


def _summary(max_spread, min_spread=1):
    return analysis.SpreadSummary(
        n=10, min=1, max=int(max_spread), median=Fraction(1),
        max_spread=Fraction(max_spread), min_spread=Fraction(min_spread),
        q_low=1, q_high=int(max_spread),
    )


class TestCompareScenarios:
    def test_identical_summaries_ratio_one(self):
        table = compare_scenarios({"load": _summary(5), "no-load": _summary(5)})
        assert all(r.ratio_vs_load == 1 for r in table.rows)

    def test_thousandfold_ratio(self):
        table = compare_scenarios(
            {"load": _summary(5000), "load-shield-fifo": _summary(5)}
        )
        row = next(r for r in table.rows if r.label == "load-shield-fifo")
        assert row.ratio_vs_load == 1000
        assert table.rows[0].label == "load"  # ordering by max_spread

    def test_missing_baseline_drops_ratio(self):
        table = compare_scenarios({"a": _summary(5), "b": _summary(9)})
        assert all(r.ratio_vs_load is None for r in table.rows)

    def test_needs_two(self):
        with pytest.raises(ValueError):
            compare_scenarios({"load": _summary(5)})


def _tenant_report(rate: float):
    cells = {("bsearch", 0): TenantCell(ops=int(rate * 10), wall_s=10.0)}
    return TenantReport(cells=cells, seed=0, config=LoadConfig())


class TestTenantImpact:
    def test_identical_reports_zero_delta(self):
        table = tenant_impact({"load": _tenant_report(100), "shield": _tenant_report(100)})
        (row,) = table.rows
        assert row.delta_pct == {"load": 0.0, "shield": 0.0}

    def test_double_throughput_plus_hundred(self):
        table = tenant_impact({"load": _tenant_report(100), "shield": _tenant_report(200)})
        (row,) = table.rows
        assert row.delta_pct["shield"] == pytest.approx(100.0)

    def test_kind_mismatch_rejected(self):
        other = TenantReport(
            cells={("matmul", 0): TenantCell(ops=5, wall_s=1.0)}, seed=0, config=LoadConfig()
        )
        with pytest.raises(ValueError, match="kinds"):
            tenant_impact({"load": _tenant_report(1), "shield": other})

    def test_missing_baseline_rejected(self):
        with pytest.raises(ValueError, match="baseline"):
            tenant_impact({"a": _tenant_report(1)})


def test_summary_json_carries_conventions():
    data = spreads([1, 2, 3]).to_json()
    assert data["median_method"] == "mean-of-central-pair"
    assert data["quantile_method"] == "nearest-rank"
    assert data["max_spread"] == 3 / 2


def test_arbitrage_trace_bands_reported():
    """Band count on a join-query work profile is reported, not asserted."""
    from silt.clock import FakeClock
    from silt.datagen import Schema, StreamSpec
    from silt.engine import QueryId, make_view
    from silt.harness import TrialSpec, run_trial

    view = make_view(QueryId.AXF)

    def poll():
        while True:
            yield view.ops

    result = run_trial(
        TrialSpec(query_id=QueryId.AXF,
                  stream=StreamSpec(Schema.FINANCE, base_count=100, seed=1, iterations=50)),
        FakeClock(poll()),
        view=view,
    )
    bands = detect_bands(result.trace.deltas, bin_width=2)
    print(f"axfinder work-profile bands: {len(bands)} "
          f"(two dominant execution paths expected)")
    assert isinstance(bands, list)  # descriptive output only
