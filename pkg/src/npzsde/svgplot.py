"""Native SVG rendering of trajectories and regime maps.

Plain string assembly, no plotting dependency: the plots are diagnostic
artifacts and must never gate the numeric pipeline. Output is a
deterministic function of the data (fixed colors, fixed tick logic, fixed
float formatting), so rerunning a command reproduces the file byte for
byte. Long trajectories are decimated to a bounded number of points before
drawing; decimation is by fixed stride and therefore deterministic too.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .thresholds import (
    COEXISTENCE,
    INCONCLUSIVE,
    PHYTOPLANKTON_ONLY,
    TOTAL_EXTINCTION,
    RegimeMapResult,
)

__all__ = ["REGIME_COLORS", "trajectory_svg", "regime_map_svg"]

REGIME_COLORS = {
    TOTAL_EXTINCTION: "#9e9e9e",
    PHYTOPLANKTON_ONLY: "#4caf50",
    COEXISTENCE: "#1976d2",
    INCONCLUSIVE: "#ffb300",
}
_COMPONENT_COLORS = (("x", "#1976d2"), ("y", "#388e3c"), ("z", "#d32f2f"))
_MAX_PLOT_POINTS = 2000
_FONT = 'font-family="Helvetica,Arial,sans-serif" font-size="12"'


def _fmt(v: float) -> str:
    # %.6g keeps files small; plotting precision, not data precision.
    return f"{v:.6g}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    """Round tick positions covering [lo, hi]; endpoints included."""
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * mag
        if step >= raw:
            break
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-9 * step:
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out or [lo]


def _polyline(ts, vs, to_px, color: str) -> str:
    pts = " ".join(f"{_fmt(to_px(t, v)[0])},{_fmt(to_px(t, v)[1])}" for t, v in zip(ts, vs))
    return f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>'


def trajectory_svg(
    times: Sequence[float],
    states: np.ndarray,
    width: int = 800,
    height: int = 420,
    title: str = "",
) -> str:
    """Line plot of the three components against time."""
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[1] != 3 or states.shape[0] != times.size:
        raise ValueError("states must be (len(times), 3)")
    stride = max(1, times.size // _MAX_PLOT_POINTS)
    ts = times[::stride]
    vs = states[::stride]

    ml, mr, mt, mb = 56, 16, 28, 40  # margins: left, right, top, bottom
    t_lo, t_hi = float(ts[0]), float(ts[-1]) if ts[-1] > ts[0] else float(ts[0]) + 1.0
    v_lo = 0.0
    v_hi = float(vs.max())
    if v_hi <= v_lo:
        v_hi = v_lo + 1.0
    v_hi *= 1.05  # headroom above the largest excursion

    def to_px(t, v):
        px = ml + (t - t_lo) / (t_hi - t_lo) * (width - ml - mr)
        py = height - mb - (v - v_lo) / (v_hi - v_lo) * (height - mt - mb)
        return px, py

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{ml}" y="18" {_FONT} font-weight="bold">{title}</text>'
        )
    ax = 'stroke="#444" stroke-width="1"'
    parts.append(f'<line x1="{ml}" y1="{height - mb}" x2="{width - mr}" y2="{height - mb}" {ax}/>')
    parts.append(f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{height - mb}" {ax}/>')
    for t in _ticks(t_lo, t_hi):
        px, _ = to_px(t, v_lo)
        parts.append(f'<line x1="{_fmt(px)}" y1="{height - mb}" x2="{_fmt(px)}" y2="{height - mb + 4}" {ax}/>')
        parts.append(
            f'<text x="{_fmt(px)}" y="{height - mb + 16}" {_FONT} text-anchor="middle">{_fmt(t)}</text>'
        )
    for v in _ticks(v_lo, v_hi):
        _, py = to_px(t_lo, v)
        parts.append(f'<line x1="{ml - 4}" y1="{_fmt(py)}" x2="{ml}" y2="{_fmt(py)}" {ax}/>')
        parts.append(
            f'<text x="{ml - 7}" y="{_fmt(py + 4)}" {_FONT} text-anchor="end">{_fmt(v)}</text>'
        )
    parts.append(
        f'<text x="{(ml + width - mr) // 2}" y="{height - 6}" {_FONT} text-anchor="middle">t</text>'
    )
    for i, (label, color) in enumerate(_COMPONENT_COLORS):
        parts.append(_polyline(ts, vs[:, i], to_px, color))
        lx = width - mr - 150 + 50 * i
        parts.append(f'<line x1="{lx}" y1="{mt}" x2="{lx + 16}" y2="{mt}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 20}" y="{mt + 4}" {_FONT}>{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def regime_map_svg(result: RegimeMapResult, cell_px: int = 48) -> str:
    """Heatmap of the classified regime over the two swept axes."""
    n1, n2 = len(result.axis1_values), len(result.axis2_values)
    ml, mr, mt, mb = 72, 170, 28, 52
    width = ml + mr + n1 * cell_px
    height = mt + mb + n2 * cell_px
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    # axis2 runs bottom-up so larger values sit higher, as on plot axes.
    for i, v1 in enumerate(result.axis1_values):
        for j, v2 in enumerate(result.axis2_values):
            color = REGIME_COLORS[result.reports[i][j].regime]
            px = ml + i * cell_px
            py = mt + (n2 - 1 - j) * cell_px
            parts.append(
                f'<rect x="{px}" y="{py}" width="{cell_px}" height="{cell_px}" '
                f'fill="{color}" stroke="white" stroke-width="1"/>'
            )
    for i, v1 in enumerate(result.axis1_values):
        px = ml + i * cell_px + cell_px // 2
        parts.append(
            f'<text x="{px}" y="{mt + n2 * cell_px + 16}" {_FONT} text-anchor="middle">{_fmt(v1)}</text>'
        )
    for j, v2 in enumerate(result.axis2_values):
        py = mt + (n2 - 1 - j) * cell_px + cell_px // 2 + 4
        parts.append(f'<text x="{ml - 7}" y="{py}" {_FONT} text-anchor="end">{_fmt(v2)}</text>')
    parts.append(
        f'<text x="{ml + n1 * cell_px // 2}" y="{height - 8}" {_FONT} '
        f'text-anchor="middle">{result.axis1_name}</text>'
    )
    parts.append(
        f'<text x="16" y="{mt + n2 * cell_px // 2}" {_FONT} text-anchor="middle" '
        f'transform="rotate(-90 16 {mt + n2 * cell_px // 2})">{result.axis2_name}</text>'
    )
    lx = ml + n1 * cell_px + 16
    for row, (regime, color) in enumerate(REGIME_COLORS.items()):
        ly = mt + row * 22
        parts.append(f'<rect x="{lx}" y="{ly}" width="14" height="14" fill="{color}"/>')
        parts.append(f'<text x="{lx + 20}" y="{ly + 11}" {_FONT}>{regime}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
