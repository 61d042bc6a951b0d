"""Minimal SVG line charts: axes, polylines, vertical markers, legend."""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from typing import Optional, Sequence

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=170, top=40, bottom=55)
PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return out


def line_chart(
    series: Sequence[tuple],
    title: str,
    xlabel: str,
    ylabel: str,
    vlines: Sequence[tuple] = (),
    diagonal: bool = False,
    xlim: Optional[tuple] = None,
    ylim: Optional[tuple] = None,
    metadata: Optional[dict] = None,
) -> str:
    """Render ``series`` of (label, xs, ys) as an SVG document string.

    ``vlines`` are (label, x) vertical markers; ``diagonal`` draws the y=x
    reference line used on ROC plots.
    """
    xs_all = [x for _, xs, _ in series for x in xs] + [x for _, x in vlines]
    ys_all = [y for _, _, ys in series for y in ys]
    x0, x1 = xlim or (min(xs_all), max(xs_all))
    y0, y1 = ylim or (min(ys_all), max(ys_all))
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN["top"] + (y1 - y) / (y1 - y0) * ph

    root = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        width=str(WIDTH),
        height=str(HEIGHT),
        viewBox=f"0 0 {WIDTH} {HEIGHT}",
    )
    if metadata:
        meta = ET.SubElement(root, "metadata")
        meta.text = "; ".join(f"{k}={v}" for k, v in metadata.items())
    ET.SubElement(root, "rect", x="0", y="0", width=str(WIDTH), height=str(HEIGHT), fill="white")
    t = ET.SubElement(root, "text", x=str(WIDTH / 2 - MARGIN["right"] / 2), y="22",
                      **{"text-anchor": "middle", "font-size": "15", "font-family": "sans-serif"})
    t.text = title

    axes = ET.SubElement(root, "g", stroke="black", fill="none")
    ET.SubElement(axes, "rect", x=_fmt(MARGIN["left"]), y=_fmt(MARGIN["top"]),
                  width=_fmt(pw), height=_fmt(ph))
    labels = ET.SubElement(root, "g", **{"font-size": "11", "font-family": "sans-serif"})
    for v in _ticks(x0, x1):
        ET.SubElement(axes, "line", x1=_fmt(px(v)), x2=_fmt(px(v)),
                      y1=_fmt(MARGIN["top"] + ph), y2=_fmt(MARGIN["top"] + ph + 5))
        e = ET.SubElement(labels, "text", x=_fmt(px(v)), y=_fmt(MARGIN["top"] + ph + 18),
                          **{"text-anchor": "middle"})
        e.text = f"{v:g}"
    for v in _ticks(y0, y1):
        ET.SubElement(axes, "line", x1=_fmt(MARGIN["left"] - 5), x2=_fmt(MARGIN["left"]),
                      y1=_fmt(py(v)), y2=_fmt(py(v)))
        e = ET.SubElement(labels, "text", x=_fmt(MARGIN["left"] - 8), y=_fmt(py(v) + 4),
                          **{"text-anchor": "end"})
        e.text = f"{v:.4g}"
    e = ET.SubElement(labels, "text", x=_fmt(MARGIN["left"] + pw / 2), y=_fmt(HEIGHT - 12),
                      **{"text-anchor": "middle"})
    e.text = xlabel
    cy = MARGIN["top"] + ph / 2
    e = ET.SubElement(labels, "text", x="16", y=_fmt(cy), transform=f"rotate(-90 16 {_fmt(cy)})",
                      **{"text-anchor": "middle"})
    e.text = ylabel

    if diagonal:
        ET.SubElement(root, "line", x1=_fmt(px(x0)), y1=_fmt(py(y0)), x2=_fmt(px(x1)),
                      y2=_fmt(py(y1)), stroke="#999999", **{"stroke-dasharray": "4 4"})
    for label, x in vlines:
        ET.SubElement(root, "line", x1=_fmt(px(x)), x2=_fmt(px(x)), y1=_fmt(MARGIN["top"]),
                      y2=_fmt(MARGIN["top"] + ph), stroke="black", **{"stroke-width": "1.5"})

    legend = ET.SubElement(root, "g", **{"font-size": "11", "font-family": "sans-serif"})
    lx = WIDTH - MARGIN["right"] + 12
    for i, (label, xs, ys) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
        ET.SubElement(root, "polyline", points=pts, fill="none", stroke=color,
                      **{"stroke-width": "1.5"})
        ly = MARGIN["top"] + 10 + 16 * i
        ET.SubElement(legend, "line", x1=_fmt(lx), x2=_fmt(lx + 18), y1=_fmt(ly), y2=_fmt(ly),
                      stroke=color, **{"stroke-width": "2"})
        e = ET.SubElement(legend, "text", x=_fmt(lx + 24), y=_fmt(ly + 4))
        e.text = label
    for j, (label, _) in enumerate(vlines):
        ly = MARGIN["top"] + 10 + 16 * (len(series) + j)
        ET.SubElement(legend, "line", x1=_fmt(lx), x2=_fmt(lx + 18), y1=_fmt(ly), y2=_fmt(ly),
                      stroke="black", **{"stroke-width": "1.5"})
        e = ET.SubElement(legend, "text", x=_fmt(lx + 24), y=_fmt(ly + 4))
        e.text = label

    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"
