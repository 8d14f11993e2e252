"""Report emission: CSV tables, a summaries JSON, and one self-contained
static HTML file with inline SVG ECDF and bar-chart panels.

Output is byte-deterministic: fixed row ordering, fixed palette, and floats
printed with Python's shortest round-trip representation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import StorageError
from .similarity import SimilarityScores, scores_to_dict
from .stats import DeltaRecord, DistributionSummary, DELTA_METRICS, summary_to_dict

PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
]

_PANEL_W = 460
_PANEL_H = 280
_MARGIN = {"left": 64, "right": 16, "top": 28, "bottom": 42}


@dataclass
class ReportBundle:
    experiment_id: str
    config_snapshot: dict
    summaries: list[DistributionSummary]
    similarity_table: list[tuple[str, str, SimilarityScores]]
    skip_report: list[tuple[str, str, str]]
    deltas: list[DeltaRecord] = field(default_factory=list)


def _fmt(value) -> str:
    """Shortest decimal that round-trips; integers stay integral."""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def emit_csv(bundle: ReportBundle, out_dir: str | Path) -> list[Path]:
    """Write deltas.csv and similarity.csv (plus skips.csv when there are
    skips) with stable lexicographic row order."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = []

        deltas_path = out / "deltas.csv"
        rows = sorted(bundle.deltas, key=lambda r: (r.page_id, r.solution, r.metric))
        lines = ["page_id,solution,metric,original,variant,delta"]
        for r in rows:
            lines.append(
                f"{r.page_id},{r.solution},{r.metric},"
                f"{_fmt(r.original_value)},{_fmt(r.variant_value)},{_fmt(r.delta)}"
            )
        deltas_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths.append(deltas_path)

        sim_path = out / "similarity.csv"
        sim_rows = sorted(bundle.similarity_table, key=lambda r: (r[0], r[1]))
        lines = ["page_id,solution,structural,functional"]
        for page_id, solution, scores in sim_rows:
            lines.append(
                f"{page_id},{solution},{_fmt(scores.structural)},{_fmt(scores.functional or 0.0)}"
            )
        sim_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths.append(sim_path)

        if bundle.skip_report:
            skips_path = out / "skips.csv"
            lines = ["page_id,solution,reason"]
            for page_id, solution, reason in sorted(bundle.skip_report):
                lines.append(f"{page_id},{solution},{reason.replace(',', ';')}")
            skips_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            paths.append(skips_path)
        return paths
    except OSError as exc:
        raise StorageError(f"cannot write CSV report: {exc}") from exc


def emit_summaries(bundle: ReportBundle, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        path = out / "summaries.json"
        payload = {
            "experiment_id": bundle.experiment_id,
            "config": bundle.config_snapshot,
            "summaries": [summary_to_dict(s) for s in bundle.summaries],
        }
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        return path
    except OSError as exc:
        raise StorageError(f"cannot write summaries.json: {exc}") from exc


# --- SVG helpers -------------------------------------------------------------


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def _tick_label(value: float) -> str:
    return f"{value:.4g}"


class _Svg:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">'
        ]

    def line(self, x1, y1, x2, y2, stroke="#444", width=1.0):
        self.parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{stroke}" stroke-width="{width}"/>'
        )

    def polyline(self, points, stroke):
        coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        self.parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{stroke}" stroke-width="1.5"/>'
        )

    def rect(self, x, y, w, h, fill):
        self.parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" fill="{fill}"/>'
        )

    def text(self, x, y, content, anchor="start", fill="#222", size=11):
        self.parts.append(
            f'<text x="{x:.2f}" y="{y:.2f}" text-anchor="{anchor}" fill="{fill}" '
            f'font-size="{size}">{content}</text>'
        )

    def render(self) -> str:
        return "".join(self.parts) + "</svg>"


def _axes(svg: _Svg, title: str, x_lo, x_hi, y_lo, y_hi, x_label, y_label):
    left, right = _MARGIN["left"], _PANEL_W - _MARGIN["right"]
    top, bottom = _MARGIN["top"], _PANEL_H - _MARGIN["bottom"]
    svg.text(_PANEL_W / 2, 16, title, anchor="middle", size=13)
    svg.line(left, bottom, right, bottom)
    svg.line(left, top, left, bottom)
    for tick in _ticks(x_lo, x_hi):
        x = left + (tick - x_lo) / (x_hi - x_lo or 1.0) * (right - left)
        svg.line(x, bottom, x, bottom + 4)
        svg.text(x, bottom + 16, _tick_label(tick), anchor="middle", size=9)
    for tick in _ticks(y_lo, y_hi):
        y = bottom - (tick - y_lo) / (y_hi - y_lo or 1.0) * (bottom - top)
        svg.line(left - 4, y, left, y)
        svg.text(left - 7, y + 3, _tick_label(tick), anchor="end", size=9)
    svg.text(_PANEL_W / 2, _PANEL_H - 6, x_label, anchor="middle", size=10)
    svg.text(12, top - 8, y_label, anchor="start", size=10)
    return left, right, top, bottom


def _ecdf_panel(title: str, series: list[tuple[str, list[tuple[float, float]]]], x_label: str) -> str:
    """One ECDF panel: one step polyline per labeled series plus a legend."""
    svg = _Svg(_PANEL_W, _PANEL_H)
    xs = [v for _, points in series for v, _ in points] or [0.0]
    x_lo, x_hi = min(xs + [0.0]), max(xs + [0.0])
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    left, right, top, bottom = _axes(svg, title, x_lo, x_hi, 0.0, 1.0, x_label, "P(X &#8804; x)")

    def sx(v):
        return left + (v - x_lo) / (x_hi - x_lo) * (right - left)

    def sy(p):
        return bottom - p * (bottom - top)

    for index, (label, points) in enumerate(series):
        color = PALETTE[index % len(PALETTE)]
        path = [(sx(points[0][0]), sy(0.0))]
        prev_p = 0.0
        for v, p in points:
            path.append((sx(v), sy(prev_p)))
            path.append((sx(v), sy(p)))
            prev_p = p
        path.append((sx(x_hi), sy(prev_p)))
        svg.polyline(path, color)
        legend_y = top + 12 * index
        svg.rect(right - 104, legend_y, 10, 10, color)
        svg.text(right - 90, legend_y + 9, label, size=10)
    return svg.render()


def _bar_panel(title: str, bars: list[tuple[str, float, float, float]], y_label: str) -> str:
    """Mean bars with ci95 whiskers; bars are (label, mean, lo, hi)."""
    svg = _Svg(_PANEL_W, _PANEL_H)
    values = [v for _, mean, lo, hi in bars for v in (mean, lo, hi)] or [0.0]
    y_lo, y_hi = min(values + [0.0]), max(values + [0.0])
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    left, right, top, bottom = _axes(svg, title, 0.0, 1.0, y_lo, y_hi, "", y_label)

    def sy(v):
        return bottom - (v - y_lo) / (y_hi - y_lo) * (bottom - top)

    n = max(len(bars), 1)
    slot = (right - left) / n
    bar_w = slot * 0.55
    zero_y = sy(max(0.0, y_lo))
    for index, (label, mean, lo, hi) in enumerate(bars):
        color = PALETTE[index % len(PALETTE)]
        x = left + slot * index + (slot - bar_w) / 2
        y_top = min(sy(mean), zero_y)
        svg.rect(x, y_top, bar_w, abs(sy(mean) - zero_y), color)
        cx = x + bar_w / 2
        svg.line(cx, sy(lo), cx, sy(hi), stroke="#222", width=1.2)
        svg.line(cx - 4, sy(lo), cx + 4, sy(lo), stroke="#222", width=1.2)
        svg.line(cx - 4, sy(hi), cx + 4, sy(hi), stroke="#222", width=1.2)
        svg.text(cx, bottom + 28, label, anchor="middle", size=9)
    return svg.render()


def emit_html(bundle: ReportBundle, out_dir: str | Path) -> Path:
    """Write one self-contained report.html: per-metric delta ECDF panels,
    per-metric mean bars with ci95 whiskers (per solution and group), and
    similarity score panels. No external assets; deterministic bytes."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metric_names = [name for name, _ in DELTA_METRICS]
    by_metric: dict[str, list[DistributionSummary]] = {name: [] for name in metric_names}
    for summary in bundle.summaries:
        by_metric.setdefault(summary.metric, []).append(summary)

    sections = []
    for metric in metric_names:
        summaries = by_metric.get(metric, [])
        if not summaries:
            continue
        combined = sorted(
            (s for s in summaries if s.group is None), key=lambda s: s.solution
        )
        grouped = sorted(
            (s for s in summaries if s.group is not None),
            key=lambda s: (s.solution, s.group),
        )
        ecdf_series = [(s.solution, s.ecdf) for s in combined]
        bars = [
            (s.solution if s.group is None else f"{s.solution}/{s.group}", s.mean, s.ci95[0], s.ci95[1])
            for s in combined + grouped
        ]
        panels = _ecdf_panel(f"delta {metric} ECDF", ecdf_series, f"delta {metric}")
        panels += _bar_panel(f"mean delta {metric} (95% CI)", bars, f"delta {metric}")
        sections.append(f"<section><h2>{metric}</h2><div class='row'>{panels}</div></section>")

    sim_by_solution: dict[str, tuple[list[float], list[float]]] = {}
    for page_id, solution, scores in bundle.similarity_table:
        struct, func = sim_by_solution.setdefault(solution, ([], []))
        struct.append(scores.structural)
        func.append(scores.functional or 0.0)
    if sim_by_solution:
        from .stats import ecdf as _ecdf  # local import keeps module deps one-way

        struct_series = [
            (solution, _ecdf(values[0]))
            for solution, values in sorted(sim_by_solution.items())
        ]
        func_series = [
            (solution, _ecdf(values[1]))
            for solution, values in sorted(sim_by_solution.items())
        ]
        panels = _ecdf_panel("structural similarity ECDF", struct_series, "score")
        panels += _ecdf_panel("functional similarity ECDF", func_series, "score")
        sections.append(f"<section><h2>similarity</h2><div class='row'>{panels}</div></section>")

    skip_rows = "".join(
        f"<tr><td>{p}</td><td>{s}</td><td>{r}</td></tr>"
        for p, s, r in sorted(bundle.skip_report)
    )
    skips_html = (
        f"<section><h2>skips</h2><table><tr><th>page</th><th>solution</th>"
        f"<th>reason</th></tr>{skip_rows}</table></section>"
        if bundle.skip_report
        else ""
    )

    config_json = json.dumps(bundle.config_snapshot, indent=2, sort_keys=True)
    html = (
        "<!doctype html><html><head><meta charset='utf-8'>"
        f"<title>experiment {bundle.experiment_id}</title>"
        "<style>body{font-family:sans-serif;margin:24px;color:#222}"
        "h1{font-size:20px}h2{font-size:16px;margin:18px 0 6px}"
        ".row svg{margin:4px 8px 4px 0}"
        "table{border-collapse:collapse}td,th{border:1px solid #bbb;padding:3px 8px;font-size:12px}"
        "pre{background:#f5f5f5;padding:8px;font-size:11px}</style></head><body>"
        f"<h1>experiment {bundle.experiment_id}</h1>"
        "<p>Delta is original minus variant; positive bars mean the solution improved "
        "the metric. Confidence intervals use the normal approximation "
        "(1.96 standard errors).</p>"
        + "".join(sections)
        + skips_html
        + f"<section><h2>configuration snapshot</h2><pre>{config_json}</pre></section>"
        "</body></html>"
    )
    path = out / "report.html"
    try:
        path.write_text(html, encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"cannot write report.html: {exc}") from exc
    return path


def write_bundle(bundle: ReportBundle, out_dir: str | Path) -> dict[str, Path]:
    """Emit every report artifact into out_dir."""
    paths = {}
    for p in emit_csv(bundle, out_dir):
        paths[p.name] = p
    paths["summaries.json"] = emit_summaries(bundle, out_dir)
    paths["report.html"] = emit_html(bundle, out_dir)
    return paths


def similarity_table_to_json(similarity_table: list[tuple[str, str, SimilarityScores]]) -> list[dict]:
    rows = []
    for page_id, solution, scores in sorted(similarity_table, key=lambda r: (r[0], r[1])):
        row = {"page_id": page_id, "solution": solution}
        row.update(scores_to_dict(scores))
        rows.append(row)
    return rows
