"""Latency time-series and spread charts as self-contained SVG files.

The SVG is generated directly so tests can make structural assertions
(element counts, class attributes) instead of comparing pixels. Output
is deterministic for a given input: one point element per plotted
observation carrying its outlier class, one polyline for the sliding
mean, and two labelled triangle markers at the first occurrence of the
global minimum and maximum. Downsampling thins normal points only;
extremes always survive.
"""

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .analysis import OutlierClass, OutlierClassification


@dataclass(frozen=True)
class PlotStyle:
    normal_color: str = "#cc7722"   # ochre
    extreme_color: str = "#8a8a8a"  # grey
    mean_color: str = "#cc0000"     # red
    marker_color: str = "#cc0000"
    point_radius: float = 1.2
    width: int = 1000
    height: int = 420
    margin: int = 55


@dataclass(frozen=True)
class PlotSpec:
    deltas: object
    classification: OutlierClassification
    mean_series: object
    mean_window: int
    downsample_threshold: int | None = None
    unit_label: str = "ticks"
    title: str = ""
    style: PlotStyle = field(default_factory=PlotStyle)


def _scale(value, lo, hi, out_lo, out_hi):
    if hi == lo:
        return (out_lo + out_hi) / 2
    return out_lo + (value - lo) * (out_hi - out_lo) / (hi - lo)


def _fmt(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


def render_timeseries(plotspec: PlotSpec, path) -> None:
    """Write the latency-vs-tuple-index plot for one trace."""
    deltas = np.asarray(plotspec.deltas, dtype=np.int64)
    n = len(deltas)
    if n == 0:
        raise ValueError("empty trace")
    classes = plotspec.classification.classes
    if len(classes) != n:
        raise ValueError(f"classification length {len(classes)} != trace length {n}")
    mean_series = np.asarray(plotspec.mean_series, dtype=np.float64)
    if not 1 <= len(mean_series) <= n:
        raise ValueError("mean series length inconsistent with trace")

    style = plotspec.style
    x0, x1 = style.margin, style.width - style.margin
    y0, y1 = style.height - style.margin, style.margin
    lo = float(deltas.min())
    hi = float(deltas.max())

    normal_idx = np.flatnonzero(classes == OutlierClass.NORMAL)
    extreme_idx = np.flatnonzero(classes != OutlierClass.NORMAL)
    threshold = plotspec.downsample_threshold
    if threshold is not None and len(normal_idx) > threshold:
        stride = math.ceil(len(normal_idx) / threshold)
        normal_idx = normal_idx[::stride]
    plot_idx = np.concatenate((normal_idx, extreme_idx))
    plot_idx.sort()

    class_names = {
        int(OutlierClass.NORMAL): "normal",
        int(OutlierClass.LOW_EXTREME): "low",
        int(OutlierClass.HIGH_EXTREME): "high",
    }
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{style.width}" '
        f'height="{style.height}" viewBox="0 0 {style.width} {style.height}">',
        f"<style>.pt.normal{{fill:{style.normal_color};}}"
        f".pt.low,.pt.high{{fill:{style.extreme_color};}}"
        f".mean{{stroke:{style.mean_color};fill:none;stroke-width:1.2;}}"
        f".extreme-marker{{fill:{style.marker_color};}}"
        f".extreme-label{{fill:{style.marker_color};font:11px sans-serif;}}"
        f".axis{{stroke:#000;stroke-width:1;}}"
        f".axis-label{{font:12px sans-serif;}}</style>",
    ]
    if plotspec.title:
        parts.append(
            f'<text class="axis-label" x="{style.width / 2}" y="18" '
            f'text-anchor="middle">{escape(plotspec.title)}</text>'
        )

    for i in plot_idx.tolist():
        cx = _scale(i, 0, n - 1, x0, x1)
        cy = _scale(float(deltas[i]), lo, hi, y0, y1)
        parts.append(
            f'<circle class="pt {class_names[int(classes[i])]}" '
            f'cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{style.point_radius}"/>'
        )

    offset = plotspec.mean_window - 1  # mean plotted at each window's right edge
    points = " ".join(
        f"{_fmt(_scale(offset + i, 0, n - 1, x0, x1))},{_fmt(_scale(v, lo, hi, y0, y1))}"
        for i, v in enumerate(mean_series.tolist())
    )
    parts.append(f'<polyline class="mean" points="{points}"/>')

    for kind, idx in (("min", int(deltas.argmin())), ("max", int(deltas.argmax()))):
        cx = _scale(idx, 0, n - 1, x0, x1)
        cy = _scale(float(deltas[idx]), lo, hi, y0, y1)
        dy = 8 if kind == "min" else -8
        parts.append(
            f'<path class="extreme-marker" d="M {_fmt(cx)} {_fmt(cy)} '
            f'l -4 {dy} l 8 0 z"/>'
        )
        parts.append(
            f'<text class="extreme-label" x="{_fmt(cx + 6)}" y="{_fmt(cy + dy)}">'
            f"{kind}={int(deltas[idx])}</text>"
        )

    parts.append(f'<line class="axis" x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>')
    parts.append(f'<line class="axis" x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>')
    parts.append(
        f'<text class="axis-label" x="{(x0 + x1) / 2}" y="{style.height - 14}" '
        f'text-anchor="middle">tuple index</text>'
    )
    parts.append(
        f'<text class="axis-label" x="16" y="{(y0 + y1) / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2})">latency '
        f"[{escape(plotspec.unit_label)}]</text>"
    )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")


def render_spread_chart(summaries: dict, path, style: PlotStyle | None = None) -> None:
    """Paired per-scenario bars: max spread up, min spread down, log heights."""
    if not summaries:
        raise ValueError("need at least one summary")
    style = style or PlotStyle()
    labels = list(summaries)
    log_max = [math.log10(float(summaries[k].max_spread)) for k in labels]
    log_min = [math.log10(float(summaries[k].min_spread)) for k in labels]
    peak = max(max(log_max), max(log_min), 1e-9)
    mid = style.height / 2
    span = style.height / 2 - style.margin
    slot = (style.width - 2 * style.margin) / len(labels)
    bar_w = min(40.0, slot / 3)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{style.width}" '
        f'height="{style.height}" viewBox="0 0 {style.width} {style.height}">',
        f"<style>.bar.max-spread{{fill:{style.normal_color};}}"
        f".bar.min-spread{{fill:{style.extreme_color};}}"
        f".axis{{stroke:#000;stroke-width:1;}}.axis-label{{font:12px sans-serif;}}</style>",
        f'<line class="axis" x1="{style.margin}" y1="{_fmt(mid)}" '
        f'x2="{style.width - style.margin}" y2="{_fmt(mid)}"/>',
    ]
    for i, label in enumerate(labels):
        cx = style.margin + slot * (i + 0.5)
        up = span * log_max[i] / peak
        down = span * log_min[i] / peak
        parts.append(
            f'<rect class="bar max-spread" x="{_fmt(cx - bar_w)}" '
            f'y="{_fmt(mid - up)}" width="{_fmt(bar_w)}" height="{_fmt(up)}"/>'
        )
        parts.append(
            f'<rect class="bar min-spread" x="{_fmt(cx)}" '
            f'y="{_fmt(mid)}" width="{_fmt(bar_w)}" height="{_fmt(down)}"/>'
        )
        parts.append(
            f'<text class="axis-label" x="{_fmt(cx)}" y="{style.height - 12}" '
            f'text-anchor="middle">{escape(label)}</text>'
        )
    parts.append(
        f'<text class="axis-label" x="16" y="{_fmt(mid)}" text-anchor="middle" '
        f'transform="rotate(-90 16 {_fmt(mid)})">spread (log scale)</text>'
    )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")


def write_points_csv(deltas, classification: OutlierClassification, path) -> None:
    """One row per observation: index, delta, outlier class."""
    names = {0: "normal", 1: "low", 2: "high"}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, (delta, cls) in enumerate(zip(deltas, classification.classes.tolist())):
            fh.write(f"{i},{delta},{names[cls]}\n")
