"""Minimal deterministic SVG emission for scatter/line charts.

Hand-rolled rather than using a plotting library so that identical inputs
produce byte-identical files (no embedded ids, fonts, or timestamps).
"""

from __future__ import annotations

import math

from .algebra import InvalidParameterError

__all__ = ["emit_svg"]

_COLORS = ("#1f77b4", "#d62728", "#e8b520", "#2ca02c", "#9467bd", "#8c564b")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + step * 1e-9:
        ticks.append(round(t / step) * step)
        t += step
    return ticks


def _log_ticks(lo: float, hi: float) -> list[float]:
    lo_d = math.floor(math.log10(lo))
    hi_d = math.ceil(math.log10(hi))
    return [10.0 ** d for d in range(int(lo_d), int(hi_d) + 1)
            if lo <= 10.0 ** d <= hi]


def emit_svg(table, x: str, ys: list[str], path: str, logx: bool = False,
             logy: bool = False, width: int = 640, height: int = 440,
             title: str = "", lines: bool = False) -> None:
    """Write a standalone SVG scatter/line chart of table columns ys vs x.

    Missing (empty) cells are skipped; log-scaled axes drop non-positive
    points.  Output bytes depend only on the arguments.
    """
    names = [c.name for c in table.columns]
    for col in [x] + list(ys):
        if col not in names:
            raise InvalidParameterError(f"column {col!r} not in table")
    xi = names.index(x)
    sets = []
    for yname in ys:
        yi = names.index(yname)
        pts = []
        for row in table.rows:
            xv, yv = row[xi], row[yi]
            if xv is None or yv is None:
                continue
            xv, yv = float(xv), float(yv)
            if logx and xv <= 0 or logy and yv <= 0:
                continue
            pts.append((xv, yv))
        sets.append((yname, pts))

    all_pts = [p for _, pts in sets for p in pts]
    margin_l, margin_r, margin_t, margin_b = 62, 16, 34, 46
    pw = width - margin_l - margin_r
    ph = height - margin_t - margin_b

    if all_pts:
        xlo = min(p[0] for p in all_pts)
        xhi = max(p[0] for p in all_pts)
        ylo = min(p[1] for p in all_pts)
        yhi = max(p[1] for p in all_pts)
    else:
        xlo, xhi, ylo, yhi = 0.0, 1.0, 0.0, 1.0

    def pad(lo, hi, log):
        if log:
            lo_l, hi_l = math.log10(lo), math.log10(hi)
            span = max(hi_l - lo_l, 1e-12)
            return 10 ** (lo_l - 0.05 * span), 10 ** (hi_l + 0.05 * span)
        span = max(hi - lo, 1e-12 * max(abs(lo), 1.0))
        return lo - 0.05 * span, hi + 0.05 * span

    xlo, xhi = pad(xlo, xhi, logx)
    ylo, yhi = pad(ylo, yhi, logy)

    def sx(v):
        if logx:
            f = (math.log10(v) - math.log10(xlo)) / (math.log10(xhi) - math.log10(xlo))
        else:
            f = (v - xlo) / (xhi - xlo)
        return margin_l + f * pw

    def sy(v):
        if logy:
            f = (math.log10(v) - math.log10(ylo)) / (math.log10(yhi) - math.log10(ylo))
        else:
            f = (v - ylo) / (yhi - ylo)
        return margin_t + (1.0 - f) * ph

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">'
    )
    out.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    out.append(
        f'<rect x="{margin_l}" y="{margin_t}" width="{pw}" height="{ph}" '
        f'fill="none" stroke="black" stroke-width="1"/>'
    )
    if title:
        out.append(
            f'<text x="{width // 2}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>'
        )
    xticks = _log_ticks(xlo, xhi) if logx else _nice_ticks(xlo, xhi)
    yticks = _log_ticks(ylo, yhi) if logy else _nice_ticks(ylo, yhi)
    for t in xticks:
        px = sx(t)
        out.append(
            f'<line x1="{_fmt(px)}" y1="{margin_t + ph}" x2="{_fmt(px)}" '
            f'y2="{margin_t + ph + 5}" stroke="black"/>'
        )
        out.append(
            f'<text x="{_fmt(px)}" y="{margin_t + ph + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt(t)}</text>'
        )
    for t in yticks:
        py = sy(t)
        out.append(
            f'<line x1="{margin_l - 5}" y1="{_fmt(py)}" x2="{margin_l}" '
            f'y2="{_fmt(py)}" stroke="black"/>'
        )
        out.append(
            f'<text x="{margin_l - 8}" y="{_fmt(py + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt(t)}</text>'
        )
    out.append(
        f'<text x="{margin_l + pw // 2}" y="{height - 8}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{x}</text>'
    )
    for k, (yname, pts) in enumerate(sets):
        color = _COLORS[k % len(_COLORS)]
        if lines and len(pts) > 1:
            d = " ".join(f"{_fmt(sx(px))},{_fmt(sy(py))}" for px, py in pts)
            out.append(
                f'<polyline points="{d}" fill="none" stroke="{color}" '
                f'stroke-width="1.5"/>'
            )
        for px, py in pts:
            out.append(
                f'<circle cx="{_fmt(sx(px))}" cy="{_fmt(sy(py))}" r="2.2" '
                f'fill="{color}" fill-opacity="0.75"/>'
            )
        out.append(
            f'<rect x="{margin_l + pw - 150}" y="{margin_t + 8 + 16 * k}" '
            f'width="10" height="10" fill="{color}"/>'
        )
        out.append(
            f'<text x="{margin_l + pw - 135}" y="{margin_t + 17 + 16 * k}" '
            f'font-family="sans-serif" font-size="11">{yname}</text>'
        )
    out.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
