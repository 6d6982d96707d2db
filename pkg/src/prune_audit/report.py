"""Scatter and summary emitters.

All output is a deterministic function of the input: stable ordering,
pinned float formatting (tau printed with 2 decimals in human tables and
full precision in CSVs, p-values in scientific notation, axis ticks at 4
significant digits).  The SVG is hand-rolled markup with no plotting
dependency: every run is one element carrying class ``point``; the argmin
train-loss run is drawn as a star (class ``oracle``), runs whose final
metric beats it are class ``anomaly`` (red), the rest ``normal`` (green).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .analytics import ACCURACY, KendallResult, metric_value, oracle_point
from .harness import RunRecord

SVG_W, SVG_H = 640, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 55

_METRIC_LABEL = {"acc": "final test accuracy (%)", "loss": "final test loss"}


def _as_point_rows(records, metric: str):
    """Normalize RunRecords/OutcomePoints to (point, per-repeat values)."""
    rows = []
    for rec in records:
        if isinstance(rec, RunRecord):
            per_repeat = rec.test_accuracies if metric == ACCURACY else rec.test_losses
            rows.append((rec.to_point(), tuple(per_repeat)))
        else:
            rows.append((rec, ()))
    return rows


def scatter_csv(records, metric: str) -> str:
    rows = _as_point_rows(records, metric)
    width = max((len(r) for _, r in rows), default=0)
    header = ["combination", "pruned_train_loss", f"{metric}_mean"]
    header += [f"{metric}_repeat{i}" for i in range(width)]
    lines = [",".join(header)]
    for point, per_repeat in rows:
        cells = [point.combination, repr(point.pruned_train_loss),
                 repr(metric_value(point, metric))]
        cells += [repr(v) for v in per_repeat]
        cells += [""] * (width - len(per_repeat))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _ticks(lo: float, hi: float, count: int = 5):
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def _star_path(cx: float, cy: float, r: float) -> str:
    pts = []
    for i in range(10):
        radius = r if i % 2 == 0 else r * 0.45
        angle = -math.pi / 2 + i * math.pi / 5
        pts.append(f"{cx + radius * math.cos(angle):.2f},"
                   f"{cy + radius * math.sin(angle):.2f}")
    return "M" + " L".join(pts) + " Z"


def scatter_svg(records, metric: str, title: str = "") -> str:
    rows = _as_point_rows(records, metric)
    if not rows:
        raise ValueError("no records to plot")
    points = [p for p, _ in rows]
    oracle = oracle_point(points)
    oracle_metric = metric_value(oracle, metric)

    xs = [p.pruned_train_loss for p in points]
    ys = [metric_value(p, metric) for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_pad = (x_hi - x_lo) * 0.05 or 1.0
    y_pad = (y_hi - y_lo) * 0.05 or 1.0
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    def sx(v):
        return MARGIN_L + (v - x_lo) / (x_hi - x_lo) * (SVG_W - MARGIN_L - MARGIN_R)

    def sy(v):
        return SVG_H - MARGIN_B - (v - y_lo) / (y_hi - y_lo) * (SVG_H - MARGIN_T - MARGIN_B)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" '
        f'viewBox="0 0 {SVG_W} {SVG_H}">',
        "<style>.normal{fill:#2a9d3a}.anomaly{fill:#d7263d}"
        ".oracle{fill:#1f77b4}text{font-family:sans-serif;font-size:12px}"
        ".axis{stroke:#333;stroke-width:1}.tick{stroke:#999;stroke-width:0.5}</style>",
        f'<rect width="{SVG_W}" height="{SVG_H}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{SVG_W / 2:.0f}" y="22" text-anchor="middle">{title}</text>')
    out.append(f'<line class="axis" x1="{MARGIN_L}" y1="{SVG_H - MARGIN_B}" '
               f'x2="{SVG_W - MARGIN_R}" y2="{SVG_H - MARGIN_B}"/>')
    out.append(f'<line class="axis" x1="{MARGIN_L}" y1="{MARGIN_T}" '
               f'x2="{MARGIN_L}" y2="{SVG_H - MARGIN_B}"/>')
    for v in _ticks(x_lo, x_hi):
        x = sx(v)
        out.append(f'<line class="tick" x1="{x:.2f}" y1="{MARGIN_T}" '
                   f'x2="{x:.2f}" y2="{SVG_H - MARGIN_B}"/>')
        out.append(f'<text x="{x:.2f}" y="{SVG_H - MARGIN_B + 18}" '
                   f'text-anchor="middle">{_fmt(v)}</text>')
    for v in _ticks(y_lo, y_hi):
        y = sy(v)
        out.append(f'<line class="tick" x1="{MARGIN_L}" y1="{y:.2f}" '
                   f'x2="{SVG_W - MARGIN_R}" y2="{y:.2f}"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{y + 4:.2f}" '
                   f'text-anchor="end">{_fmt(v)}</text>')
    out.append(f'<text x="{(MARGIN_L + SVG_W - MARGIN_R) / 2:.0f}" '
               f'y="{SVG_H - 12}" text-anchor="middle">pruned train loss</text>')
    out.append(f'<text x="16" y="{(MARGIN_T + SVG_H - MARGIN_B) / 2:.0f}" '
               f'text-anchor="middle" transform="rotate(-90 16 '
               f'{(MARGIN_T + SVG_H - MARGIN_B) / 2:.0f})">'
               f'{_METRIC_LABEL[metric]}</text>')

    better = (lambda v: v > oracle_metric) if metric == ACCURACY else (lambda v: v < oracle_metric)
    for p in points:
        x, y = sx(p.pruned_train_loss), sy(metric_value(p, metric))
        if p == oracle:
            out.append(f'<path class="point oracle" d="{_star_path(x, y, 9)}">'
                       f"<title>{p.combination}</title></path>")
        else:
            css = "anomaly" if better(metric_value(p, metric)) else "normal"
            out.append(f'<circle class="point {css}" cx="{x:.2f}" cy="{y:.2f}" r="3.5">'
                       f"<title>{p.combination}</title></circle>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_scatter(records, metric: str, out_base, title: str = ""):
    """Write ``<out_base>.csv`` and ``<out_base>.svg``; returns both paths."""
    out_base = Path(out_base)
    out_base.parent.mkdir(parents=True, exist_ok=True)
    csv_path = out_base.with_suffix(".csv")
    svg_path = out_base.with_suffix(".svg")
    csv_path.write_text(scatter_csv(records, metric), encoding="utf-8")
    svg_path.write_text(scatter_svg(records, metric, title=title), encoding="utf-8")
    return csv_path, svg_path


@dataclass(frozen=True)
class SummaryEntry:
    label: str                  # e.g. which layers were pruned
    ratio: float | None         # None when not applicable
    result: KendallResult
    verdict: str


INVALID_MARKER = "[invalid]"


def format_cell(result: KendallResult, verdict: str) -> str:
    cell = f"{result.tau:.2f} / {result.p_value:.1e}"
    if verdict != "valid":
        cell += f" {INVALID_MARKER}"
    return cell


def emit_summary(entries) -> tuple[str, str]:
    """Human table plus a full-precision CSV twin, as strings."""
    entries = list(entries)
    rows = [("layers", "ratio", "kendall tau / p-value")]
    rows += [
        (e.label, "-" if e.ratio is None else f"{e.ratio:g}",
         format_cell(e.result, e.verdict))
        for e in entries
    ]
    widths = [max(len(r[c]) for r in rows) for c in range(3)]
    text_lines = []
    for i, row in enumerate(rows):
        text_lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            text_lines.append("  ".join("-" * w for w in widths))
    csv_lines = ["label,ratio,tau,p_value,concordant,discordant,n,verdict"]
    csv_lines += [
        f"{e.label},{'' if e.ratio is None else repr(e.ratio)},"
        f"{e.result.tau!r},{e.result.p_value!r},"
        f"{e.result.concordant},{e.result.discordant},{e.result.n},{e.verdict}"
        for e in entries
    ]
    return "\n".join(text_lines) + "\n", "\n".join(csv_lines) + "\n"
