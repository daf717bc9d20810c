"""CSV and SVG result artifacts.

Per scenario, a CSV ``tick,crowds_ms,dualpath_ms,improvement,speedup_pct``
where ``improvement`` is the (crowds - dualpath) / 100 metric and
``speedup_pct`` is the conventional percentage (crowds - dualpath) /
crowds * 100, added as a clearly separate convenience column. The summary
CSV aggregates the improvement series per scenario. All float columns use
six decimal places and line-feed newlines, so identical runs produce
byte-identical files. SVG charts are hand-rolled polylines, presentation
only.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Iterable, Sequence

from .scenarios import ScenarioSeries

CSV_HEADER = "tick,crowds_ms,dualpath_ms,improvement,speedup_pct"
SUMMARY_HEADER = "scenario,mean_improvement,min,max"


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def scenario_csv(series: ScenarioSeries) -> str:
    lines = [CSV_HEADER]
    for tick, c, d, imp in zip(series.ticks, series.crowds_ms,
                               series.dualpath_ms, series.improvement):
        pct = (c - d) / c * 100.0 if c > 0 else 0.0
        lines.append(f"{tick},{_fmt(c)},{_fmt(d)},{_fmt(imp)},{_fmt(pct)}")
    return "\n".join(lines) + "\n"


def summary_csv(results: Sequence[ScenarioSeries]) -> str:
    lines = [SUMMARY_HEADER]
    for series in results:
        imp = series.improvement
        mean = sum(imp) / len(imp)
        lines.append(f"{series.scenario_id},{_fmt(mean)},{_fmt(min(imp))},{_fmt(max(imp))}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Minimal deterministic SVG line charts
# ---------------------------------------------------------------------------

_W, _H = 720, 420
_ML, _MR, _MT, _MB = 60, 20, 40, 40


def _polyline(xs, ys, lo, hi, color: str) -> str:
    span = (hi - lo) or 1.0
    n = max(len(xs) - 1, 1)
    points = []
    for i, (x, y) in enumerate(zip(xs, ys)):
        px = _ML + (_W - _ML - _MR) * i / n
        py = _MT + (_H - _MT - _MB) * (1.0 - (y - lo) / span)
        points.append(f"{px:.1f},{py:.1f}")
    return (f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
            f'points="{" ".join(points)}"/>')


def line_chart_svg(title: str, ticks: Sequence[int],
                   labeled_series: dict[str, Sequence[float]]) -> str:
    """Render one or more series against the tick axis."""
    values = [v for series in labeled_series.values() for v in series]
    lo, hi = min(values), max(values)
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    colors = ("#c0392b", "#2471a3", "#1e8449", "#7d3c98")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.0f}" y="24" text-anchor="middle" font-size="16" '
        f'font-family="sans-serif">{title}</text>',
        f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="black"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>',
        f'<text x="{_ML - 8}" y="{_H - _MB}" text-anchor="end" font-size="11" '
        f'font-family="sans-serif">{lo:.2f}</text>',
        f'<text x="{_ML - 8}" y="{_MT + 10}" text-anchor="end" font-size="11" '
        f'font-family="sans-serif">{hi:.2f}</text>',
        f'<text x="{_ML}" y="{_H - _MB + 16}" font-size="11" '
        f'font-family="sans-serif">tick {ticks[0]}</text>',
        f'<text x="{_W - _MR}" y="{_H - _MB + 16}" text-anchor="end" font-size="11" '
        f'font-family="sans-serif">tick {ticks[-1]}</text>',
    ]
    for i, (label, series) in enumerate(labeled_series.items()):
        color = colors[i % len(colors)]
        parts.append(_polyline(range(len(series)), series, lo, hi, color))
        parts.append(f'<text x="{_ML + 10}" y="{_MT + 16 + 16 * i}" font-size="12" '
                     f'fill="{color}" font-family="sans-serif">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def export_report(results: Iterable[ScenarioSeries], out_dir,
                  emit_svg: bool = False) -> list[Path]:
    """Write one CSV per scenario plus the summary (and optional charts).

    The output directory is created and probed for writability before
    anything is written, so a bad destination fails with no partial output.
    """
    results = list(results)
    if not results:
        raise ValueError("no scenario results to export")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")

    written: list[Path] = []
    for series in results:
        path = out / f"{series.scenario_id}.csv"
        path.write_text(scenario_csv(series), encoding="ascii", newline="\n")
        written.append(path)
        if emit_svg:
            delay = out / f"{series.scenario_id}_delay.svg"
            delay.write_text(line_chart_svg(
                f"{series.scenario_id}: delay ({series.title})", series.ticks,
                {"crowds": series.crowds_ms, "dual-path": series.dualpath_ms}),
                encoding="ascii", newline="\n")
            written.append(delay)
            improvement = out / f"{series.scenario_id}_improvement.svg"
            improvement.write_text(line_chart_svg(
                f"{series.scenario_id}: improvement ratio", series.ticks,
                {"improvement": series.improvement}),
                encoding="ascii", newline="\n")
            written.append(improvement)
    summary = out / "summary.csv"
    summary.write_text(summary_csv(results), encoding="ascii", newline="\n")
    written.append(summary)
    return written
