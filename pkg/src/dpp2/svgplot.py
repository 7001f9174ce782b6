"""Hand-emitted SVG line plots (log-scale y), with no plotting dependency.

The emitter is a pure function of its inputs: identical series produce
byte-identical SVG 1.1 documents. Intended for the optimality-gap-versus-
iteration curves of the benchmark sweeps; CSV remains the canonical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["Series", "emit_plot"]

_WIDTH, _HEIGHT = 720, 480
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 72, 24, 40, 56
_PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2",
)


@dataclass(frozen=True)
class Series:
    label: str
    x: tuple
    y: tuple

    @classmethod
    def make(cls, label, x, y) -> "Series":
        return cls(label=str(label), x=tuple(float(v) for v in x),
                   y=tuple(float(v) for v in y))


def _fmt(value: float) -> str:
    return f"{value:.2f}".rstrip("0").rstrip(".")


def _decade_label(exponent: int) -> str:
    return f"1e{exponent:d}"


def emit_plot(
    series: list[Series],
    title: str = "",
    x_label: str = "iteration",
    y_label: str = "optimality gap",
) -> str:
    """Render a log-y line plot; one legend entry per series.

    Nonpositive y values cannot appear on a log axis and are dropped
    pointwise. Raises if no series or no positive values remain.
    """
    if not series:
        raise ValueError("refusing to plot: no input series")
    cleaned = []
    for s in series:
        if len(s.x) != len(s.y):
            raise ValueError(f"series {s.label!r}: x and y lengths differ")
        pts = [(x, y) for x, y in zip(s.x, s.y) if y > 0 and math.isfinite(y)]
        if pts:
            cleaned.append((s.label, pts))
    if not cleaned:
        raise ValueError("refusing to plot: no positive finite values in any series")

    xs = [x for _, pts in cleaned for x, _ in pts]
    ys = [y for _, pts in cleaned for _, y in pts]
    x_lo, x_hi = min(xs), max(xs)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    exp_lo = math.floor(math.log10(min(ys)))
    exp_hi = math.ceil(math.log10(max(ys)))
    if exp_hi == exp_lo:
        exp_hi += 1

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        frac = (math.log10(y) - exp_lo) / (exp_hi - exp_lo)
        return _MARGIN_T + (1.0 - frac) * plot_h

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_WIDTH}" height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">'
    )
    out.append(f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>')
    if title:
        out.append(
            f'<text x="{_WIDTH / 2:.0f}" y="24" font-family="sans-serif" '
            f'font-size="16" text-anchor="middle">{_escape(title)}</text>'
        )
    # frame
    out.append(
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="black" stroke-width="1"/>'
    )
    # y decade grid and labels
    step = max(1, (exp_hi - exp_lo) // 8)
    for exponent in range(exp_lo, exp_hi + 1, step):
        y_pix = py(10.0**exponent)
        out.append(
            f'<line x1="{_MARGIN_L}" y1="{_fmt(y_pix)}" x2="{_WIDTH - _MARGIN_R}" '
            f'y2="{_fmt(y_pix)}" stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_MARGIN_L - 6}" y="{_fmt(y_pix + 4)}" font-family="sans-serif" '
            f'font-size="11" text-anchor="end">{_decade_label(exponent)}</text>'
        )
    # x ticks: 5 evenly spaced
    for i in range(6):
        x_val = x_lo + (x_hi - x_lo) * i / 5
        x_pix = px(x_val)
        out.append(
            f'<line x1="{_fmt(x_pix)}" y1="{_HEIGHT - _MARGIN_B}" x2="{_fmt(x_pix)}" '
            f'y2="{_HEIGHT - _MARGIN_B + 5}" stroke="black" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(x_pix)}" y="{_HEIGHT - _MARGIN_B + 18}" '
            f'font-family="sans-serif" font-size="11" text-anchor="middle">{_fmt(x_val)}</text>'
        )
    # axis labels
    out.append(
        f'<text x="{_MARGIN_L + plot_w / 2:.0f}" y="{_HEIGHT - 12}" font-family="sans-serif" '
        f'font-size="13" text-anchor="middle">{_escape(x_label)}</text>'
    )
    out.append(
        f'<text x="18" y="{_MARGIN_T + plot_h / 2:.0f}" font-family="sans-serif" '
        f'font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 18 {_MARGIN_T + plot_h / 2:.0f})">{_escape(y_label)}</text>'
    )
    # series
    for idx, (label, pts) in enumerate(cleaned):
        color = _PALETTE[idx % len(_PALETTE)]
        coords = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in pts)
        out.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
    # legend
    legend_x = _MARGIN_L + plot_w - 150
    legend_y = _MARGIN_T + 10
    out.append(
        f'<rect x="{legend_x - 8}" y="{legend_y - 4}" width="150" '
        f'height="{16 * len(cleaned) + 8}" fill="white" stroke="#999999" stroke-width="0.5"/>'
    )
    for idx, (label, _) in enumerate(cleaned):
        color = _PALETTE[idx % len(_PALETTE)]
        row_y = legend_y + 16 * idx + 8
        out.append(
            f'<line x1="{legend_x}" y1="{row_y}" x2="{legend_x + 22}" y2="{row_y}" '
            f'stroke="{color}" stroke-width="1.5"/>'
        )
        out.append(
            f'<text x="{legend_x + 28}" y="{row_y + 4}" font-family="sans-serif" '
            f'font-size="11">{_escape(label)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        .replace('"', "&quot;")
    )
