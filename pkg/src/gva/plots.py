"""Deterministic SVG charts for result tables.

Hand-rolled SVG so that the same data always renders to the same bytes: no
timestamps, no generated ids, fixed-precision coordinates. Charts are simple
line/scatter panels with labeled axes; empty inputs render axes plus a
"no data" annotation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DataError

PALETTE = ("#1f6f8b", "#c1553d", "#5a8f4e", "#8a5d9e", "#b08a2e", "#4d4d4d")

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 16, 34, 46


@dataclass
class Series:
    name: str
    xs: list
    ys: list
    kind: str = "line"  # line | scatter

    def __post_init__(self):
        if self.kind not in ("line", "scatter"):
            raise ValueError(f"series kind must be line or scatter, got {self.kind!r}")
        if len(self.xs) != len(self.ys):
            raise ValueError(f"series {self.name!r} has mismatched x/y lengths")


@dataclass
class Chart:
    title: str
    x_label: str
    y_label: str
    series: list[Series] = field(default_factory=list)


def _fmt(v: float) -> str:
    return format(v, ".2f")


def _tick_values(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    span = hi - lo
    step = 10.0 ** math.floor(math.log10(span / n))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if span / (step * mult) <= n:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-12 * span:
        ticks.append(0.0 if abs(v) < 1e-12 * span else v)
        v += step
    return ticks


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e5 or abs(v) < 1e-3:
        return format(v, ".1e")
    return format(v, ".6g")


def _esc(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))


def render_chart(chart: Chart) -> str:
    """One SVG panel; deterministic bytes for identical input."""
    points = [(float(x), float(y)) for s in chart.series
              for x, y in zip(s.xs, s.ys)
              if math.isfinite(float(x)) and math.isfinite(float(y))]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{WIDTH / 2:.0f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{_esc(chart.title)}</text>',
    ]
    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
    axis = (f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="#333333"/>'
            f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="#333333"/>')
    labels = (
        f'<text x="{(x0 + x1) / 2:.0f}" y="{HEIGHT - 10}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{_esc(chart.x_label)}</text>'
        f'<text x="16" y="{(y0 + y1) / 2:.0f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2:.0f})">{_esc(chart.y_label)}</text>'
    )
    if not points:
        parts.append(axis)
        parts.append(labels)
        parts.append(
            f'<text x="{(x0 + x1) / 2:.0f}" y="{(y0 + y1) / 2:.0f}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="13" '
            f'fill="#888888">no data</text>'
        )
        parts.append("</svg>")
        return "\n".join(parts) + "\n"
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    xlo, xhi = min(xs), max(xs)
    ylo, yhi = min(ys), max(ys)
    if xhi == xlo:
        xlo, xhi = xlo - 0.5, xhi + 0.5
    if yhi == ylo:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    ypad = 0.05 * (yhi - ylo)
    ylo, yhi = ylo - ypad, yhi + ypad

    def px(x: float) -> float:
        return x0 + (x - xlo) / (xhi - xlo) * (x1 - x0)

    def py(y: float) -> float:
        return y0 - (y - ylo) / (yhi - ylo) * (y0 - y1)

    for tv in _tick_values(xlo, xhi):
        parts.append(
            f'<line x1="{_fmt(px(tv))}" y1="{y0}" x2="{_fmt(px(tv))}" '
            f'y2="{y0 + 4}" stroke="#333333"/>'
            f'<text x="{_fmt(px(tv))}" y="{y0 + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{_tick_label(tv)}</text>'
        )
    for tv in _tick_values(ylo, yhi):
        parts.append(
            f'<line x1="{x0 - 4}" y1="{_fmt(py(tv))}" x2="{x0}" '
            f'y2="{_fmt(py(tv))}" stroke="#333333"/>'
            f'<text x="{x0 - 7}" y="{_fmt(py(tv) + 3)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{_tick_label(tv)}</text>'
        )
    parts.append(axis)
    parts.append(labels)
    for i, s in enumerate(chart.series):
        color = PALETTE[i % len(PALETTE)]
        pts = [(px(float(x)), py(float(y))) for x, y in zip(s.xs, s.ys)
               if math.isfinite(float(x)) and math.isfinite(float(y))]
        if not pts:
            continue
        if s.kind == "line":
            coords = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in pts)
            parts.append(
                f'<polyline points="{coords}" fill="none" stroke="{color}" '
                f'stroke-width="1.5"/>'
            )
        else:
            for a, b in pts:
                parts.append(
                    f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="2.2" '
                    f'fill="{color}" fill-opacity="0.55"/>'
                )
        ly = MARGIN_T + 14 * i + 4
        parts.append(
            f'<rect x="{x1 - 128}" y="{ly - 8}" width="10" height="10" '
            f'fill="{color}"/>'
            f'<text x="{x1 - 114}" y="{ly + 1}" font-family="sans-serif" '
            f'font-size="10">{_esc(s.name)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# named plot specs over CSV tables


def _columns(header: list[str], rows: list[list[str]], wanted: list[str]) -> dict:
    missing = [c for c in wanted if c not in header]
    if missing:
        raise DataError(f"CSV is missing columns: {', '.join(missing)}")
    idx = {c: header.index(c) for c in wanted}
    return {c: [float(r[i]) for r in rows] for c, i in idx.items()}


def plot_series(header, rows) -> dict[str, str]:
    """First column as x, every other column as a line."""
    if len(header) < 2:
        raise DataError("series plot needs at least two columns")
    cols = _columns(header, rows, header)
    x = header[0]
    chart = Chart(title="series", x_label=x, y_label="value",
                  series=[Series(c, cols[x], cols[c]) for c in header[1:]])
    return {"series.svg": render_chart(chart)}


def plot_training_curves(header, rows) -> dict[str, str]:
    """Per-seed reward scatter plus mean line, one panel per variant."""
    cols = _columns(header, rows, ["step", "eval_seed", "reward_raw", "reward_ema"])
    out = {}
    for variant in ("raw", "ema"):
        rewards = cols[f"reward_{variant}"]
        by_step: dict[float, list[float]] = {}
        for s, r in zip(cols["step"], rewards):
            by_step.setdefault(s, []).append(r)
        steps = sorted(by_step)
        means = [sum(by_step[s]) / len(by_step[s]) for s in steps]
        chart = Chart(
            title=f"rollout reward per checkpoint ({variant})",
            x_label="optimizer step", y_label="total reward",
            series=[
                Series("per-seed", cols["step"], rewards, kind="scatter"),
                Series("mean", steps, means),
            ],
        )
        out[f"curves-{variant}.svg"] = render_chart(chart)
    return out


def plot_mse_bounds(header, rows) -> dict[str, str]:
    """Monte Carlo filtered MSE against its analytic envelope, per cell."""
    cols = _columns(header, rows, ["mc_mse_ema", "lb_ema", "ub_ema"])
    n = len(cols["mc_mse_ema"])
    idx = list(range(n))
    chart = Chart(
        title="filtered MSE vs analytic bounds",
        x_label="grid cell", y_label="terminal MSE",
        series=[
            Series("lower bound", idx, cols["lb_ema"]),
            Series("upper bound", idx, cols["ub_ema"]),
            Series("monte carlo", idx, cols["mc_mse_ema"], kind="scatter"),
        ],
    )
    return {"mse-bounds.svg": render_chart(chart)}


def plot_variance_curves(header, rows) -> dict[str, str]:
    """Empirical variance trajectories against exact law and filter bound."""
    cols = _columns(header, rows,
                    ["time", "var_raw_mc", "var_raw_exact", "var_ema_mc",
                     "var_ema_bound"])
    chart = Chart(
        title="variance of iterate and filter",
        x_label="time", y_label="variance",
        series=[
            Series("var raw (mc)", cols["time"], cols["var_raw_mc"], kind="scatter"),
            Series("var raw (exact)", cols["time"], cols["var_raw_exact"]),
            Series("var ema (mc)", cols["time"], cols["var_ema_mc"], kind="scatter"),
            Series("var ema (bound)", cols["time"], cols["var_ema_bound"]),
        ],
    )
    return {"variance-curves.svg": render_chart(chart)}


def plot_cliff_curves(header, rows) -> dict[str, str]:
    """Cliff reward of raw vs filtered iterates over training time."""
    cols = _columns(header, rows, ["t", "raw_J", "ema_J"])
    chart = Chart(
        title="cliff reward, raw vs filtered",
        x_label="step", y_label="expected reward",
        series=[
            Series("raw", cols["t"], cols["raw_J"]),
            Series("ema", cols["t"], cols["ema_J"]),
        ],
    )
    return {"cliff-curves.svg": render_chart(chart)}


PLOT_SPECS = {
    "series": plot_series,
    "training-curves": plot_training_curves,
    "mse-bounds": plot_mse_bounds,
    "variance-curves": plot_variance_curves,
    "cliff-curves": plot_cliff_curves,
}


def render_csv(header, rows, spec: str) -> dict[str, str]:
    if spec not in PLOT_SPECS:
        raise DataError(
            f"unknown plot spec {spec!r}; available: {', '.join(sorted(PLOT_SPECS))}"
        )
    return PLOT_SPECS[spec](header, rows)
