"""Minimal self-contained SVG line/scatter plots (no plotting dependency).

Good enough for the two figure families this package produces: per-iteration
error curves (log y) and log-log slope plots with a fitted line and a slope
annotation.
"""

from __future__ import annotations

import math

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

WIDTH, HEIGHT = 640, 440
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50


def _ticks(lo: float, hi: float, count: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-12 * abs(step):
        ticks.append(v)
        v += step
    return ticks


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:.4g}"


def line_plot(
    path,
    series: list[dict],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logy: bool = False,
    annotations: list[str] | None = None,
) -> None:
    """Write an SVG plot.

    Each series dict carries name, xs, ys and optionally kind ("line" or
    "points"). With logy=True the y data are log10-transformed (nonpositive
    values dropped) and the axis is labeled in log10 units.
    """
    prepared = []
    for s in series:
        xs = np.asarray(s["xs"], dtype=float)
        ys = np.asarray(s["ys"], dtype=float)
        if logy:
            keep = ys > 0
            xs, ys = xs[keep], np.log10(ys[keep])
        keep = np.isfinite(xs) & np.isfinite(ys)
        prepared.append((s.get("name", ""), xs[keep], ys[keep], s.get("kind", "line")))

    all_x = np.concatenate([p[1] for p in prepared if p[1].size]) if prepared else np.array([0.0])
    all_y = np.concatenate([p[2] for p in prepared if p[2].size]) if prepared else np.array([0.0])
    if all_x.size == 0:
        all_x, all_y = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    x_lo, x_hi = float(all_x.min()), float(all_x.max())
    y_lo, y_hi = float(all_y.min()), float(all_y.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad_y = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad_y, y_hi + pad_y

    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x):
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y):
        return MARGIN_T + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="15" '
        f'font-family="sans-serif">{title}</text>',
    ]
    # Axes box and ticks.
    parts.append(
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#333" stroke-width="1"/>'
    )
    for tx in _ticks(x_lo, x_hi):
        px = sx(tx)
        parts.append(
            f'<line x1="{px:.1f}" y1="{MARGIN_T + plot_h}" x2="{px:.1f}" '
            f'y2="{MARGIN_T + plot_h + 5}" stroke="#333"/>'
        )
        parts.append(
            f'<text x="{px:.1f}" y="{MARGIN_T + plot_h + 18}" text-anchor="middle" '
            f'font-size="11" font-family="sans-serif">{_fmt(tx)}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        py = sy(ty)
        parts.append(
            f'<line x1="{MARGIN_L - 5}" y1="{py:.1f}" x2="{MARGIN_L}" y2="{py:.1f}" stroke="#333"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L - 8}" y="{py + 4:.1f}" text-anchor="end" '
            f'font-size="11" font-family="sans-serif">{_fmt(ty)}</text>'
        )
    parts.append(
        f'<text x="{MARGIN_L + plot_w / 2}" y="{HEIGHT - 12}" text-anchor="middle" '
        f'font-size="13" font-family="sans-serif">{xlabel}</text>'
    )
    ylab = ("log10 " if logy and not ylabel.startswith("log") else "") + ylabel
    parts.append(
        f'<text x="16" y="{MARGIN_T + plot_h / 2}" text-anchor="middle" font-size="13" '
        f'font-family="sans-serif" transform="rotate(-90 16 {MARGIN_T + plot_h / 2})">{ylab}</text>'
    )

    for k, (name, xs, ys, kind) in enumerate(prepared):
        color = PALETTE[k % len(PALETTE)]
        if kind == "points":
            for x, y in zip(xs, ys):
                parts.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3.5" fill="{color}"/>')
        else:
            pts = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in zip(xs, ys))
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        ly = MARGIN_T + 16 + 16 * k
        lx = MARGIN_L + plot_w - 150
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" stroke="{color}" stroke-width="3"/>')
        parts.append(
            f'<text x="{lx + 28}" y="{ly}" font-size="11" font-family="sans-serif">{name}</text>'
        )

    for j, note in enumerate(annotations or []):
        parts.append(
            f'<text x="{MARGIN_L + 10}" y="{MARGIN_T + 16 + 15 * j}" font-size="12" '
            f'font-family="sans-serif" fill="#444">{note}</text>'
        )

    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
