"""Structural assertions on the rendered SVG output."""

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from silt import analysis
from silt.analysis import classify_outliers, sliding_mean
from silt.report import PlotSpec, render_spread_chart, render_timeseries, write_points_csv

NS = "{http://www.w3.org/2000/svg}"


def _svg(path):
    return ET.parse(path).getroot()


def _by_class(root, tag, token):
    return [el for el in root.iter(f"{NS}{tag}") if token in el.get("class", "").split()]


def _plotspec(deltas, downsample=None, window=None):
    window = window or min(1000, len(deltas))
    return PlotSpec(
        deltas=deltas,
        classification=classify_outliers(deltas),
        mean_series=sliding_mean(deltas, window),
        mean_window=window,
        downsample_threshold=downsample,
    )


def test_constant_trace_structure(tmp_path):
    out = tmp_path / "c.svg"
    render_timeseries(_plotspec([10] * 100), out)
    root = _svg(out)
    assert len(list(root.iter(f"{NS}circle"))) == 100
    assert len(list(root.iter(f"{NS}polyline"))) == 1
    markers = _by_class(root, "path", "extreme-marker")
    labels = _by_class(root, "text", "extreme-label")
    assert len(markers) == 2
    assert len(labels) == 2
    assert {t.text for t in labels} == {"min=10", "max=10"}


def test_length_mismatch_rejected(tmp_path):
    spec = PlotSpec(
        deltas=[1, 2, 3],
        classification=classify_outliers([1, 2]),
        mean_series=sliding_mean([1, 2, 3], 2),
        mean_window=2,
    )
    with pytest.raises(ValueError, match="classification"):
        render_timeseries(spec, tmp_path / "x.svg")


def test_downsampling_keeps_all_extremes(tmp_path):
    rng = np.random.default_rng(3)
    deltas = rng.integers(100, 110, size=20_000).tolist()
    for i in range(0, 20_000, 997):
        deltas[i] = 5000 + i  # guaranteed high extremes
    out = tmp_path / "d.svg"
    render_timeseries(_plotspec(deltas, downsample=1000), out)
    root = _svg(out)
    classification = classify_outliers(deltas)
    normals = _by_class(root, "circle", "normal")
    highs = _by_class(root, "circle", "high")
    lows = _by_class(root, "circle", "low")
    assert len(normals) <= 1000
    assert len(highs) == classification.n_high
    assert len(lows) == classification.n_low


def test_output_deterministic(tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    deltas = [3, 1, 4, 1, 5, 9, 2, 6]
    render_timeseries(_plotspec(deltas, window=2), a)
    render_timeseries(_plotspec(deltas, window=2), b)
    assert a.read_bytes() == b.read_bytes()


def test_axis_labels_in_trace_units(tmp_path):
    out = tmp_path / "u.svg"
    spec = _plotspec([5, 6, 7])
    render_timeseries(spec, out)
    texts = {t.text for t in _svg(out).iter(f"{NS}text")}
    assert "tuple index" in texts
    assert any("latency" in (t or "") for t in texts)


class TestSpreadChart:
    def test_three_scenarios_six_bars(self, tmp_path):
        from fractions import Fraction

        def summary(mx, mn):
            return analysis.SpreadSummary(
                n=10, min=1, max=mx, median=Fraction(1),
                max_spread=Fraction(mx), min_spread=Fraction(mn), q_low=1, q_high=mx,
            )

        out = tmp_path / "s.svg"
        summaries = {"load": summary(1000, 5), "no-load": summary(8, 2),
                     "load-shield-fifo": summary(3, 2)}
        render_spread_chart(summaries, out)
        root = _svg(out)
        up = _by_class(root, "rect", "max-spread")
        down = _by_class(root, "rect", "min-spread")
        assert len(up) == 3 and len(down) == 3
        # bar order follows the given label order
        labels = [t.text for t in root.iter(f"{NS}text") if t.text in summaries]
        assert labels == list(summaries)
        # log scale: the 1000x bar dwarfs the 8x bar
        assert float(up[0].get("height")) > 2 * float(up[1].get("height"))

    def test_unit_spread_zero_height(self, tmp_path):
        from fractions import Fraction

        summary = analysis.SpreadSummary(
            n=3, min=10, max=10, median=Fraction(10),
            max_spread=Fraction(1), min_spread=Fraction(1), q_low=10, q_high=10,
        )
        out = tmp_path / "z.svg"
        render_spread_chart({"only": summary}, out)
        bars = _by_class(_svg(out), "rect", "max-spread")
        assert float(bars[0].get("height")) == 0.0

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            render_spread_chart({}, tmp_path / "e.svg")


def test_points_csv(tmp_path):
    deltas = [5, 6, 7]
    out = tmp_path / "p.csv"
    write_points_csv(deltas, classify_outliers(deltas), out)
    lines = out.read_text().splitlines()
    assert lines == ["0,5,normal", "1,6,normal", "2,7,normal"]
