"""Metrics rows, the experiment CSV schema, and deterministic SVG plots.

CSV rules are part of the external contract: the column order below is
fixed, reals are written with %.6g, integers bare, and rows are appended
with plain \\n endings so reruns of the same experiment produce identical
bytes except for the two wall-clock columns.

The SVG renderers are deliberately dependency-free.  They emit elements in
sorted key order with fixed-precision coordinates, so a given set of rows
always renders to identical bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError

CSV_COLUMNS = (
    "experiment_id", "mode", "r_cluster", "r_synapse", "seed", "generation",
    "network_id", "accuracy", "storage_bytes", "alive_synapses",
    "train_seconds", "cumulative_seconds",
)

_INT_COLUMNS = {"seed", "generation", "network_id", "storage_bytes",
                "alive_synapses"}
_REAL_COLUMNS = {"r_cluster", "r_synapse", "accuracy", "train_seconds",
                 "cumulative_seconds"}


@dataclass(frozen=True)
class MetricsRow:
    experiment_id: str
    mode: str
    r_cluster: float
    r_synapse: float
    seed: int
    generation: int
    network_id: int
    accuracy: float
    storage_bytes: int
    alive_synapses: int
    train_seconds: float
    cumulative_seconds: float


def _format_cell(column: str, value) -> str:
    if column in _INT_COLUMNS:
        return str(int(value))
    if column in _REAL_COLUMNS:
        return "%.6g" % float(value)
    return str(value)


def append_metrics_csv(path, rows) -> int:
    """Append rows, writing the header first when the file does not exist."""
    path = Path(path)
    lines = []
    if not path.exists():
        lines.append(",".join(CSV_COLUMNS))
    for row in rows:
        lines.append(",".join(_format_cell(c, getattr(row, c))
                              for c in CSV_COLUMNS))
    if lines:
        with open(path, "a", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    return len(rows)


def read_metrics_csv(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"metrics file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
            raise DataError(f"unexpected columns in {path}: {reader.fieldnames}")
        rows = []
        for rec in reader:
            rows.append(MetricsRow(
                experiment_id=rec["experiment_id"], mode=rec["mode"],
                r_cluster=float(rec["r_cluster"]),
                r_synapse=float(rec["r_synapse"]), seed=int(rec["seed"]),
                generation=int(rec["generation"]),
                network_id=int(rec["network_id"]),
                accuracy=float(rec["accuracy"]),
                storage_bytes=int(rec["storage_bytes"]),
                alive_synapses=int(rec["alive_synapses"]),
                train_seconds=float(rec["train_seconds"]),
                cumulative_seconds=float(rec["cumulative_seconds"])))
    return rows


# ---------------------------------------------------------------------------
# plotting

_WIDTH, _HEIGHT, _MARGIN = 640, 420, 56


def _palette(values):
    """Stable color per sorted key: blue for low values through red for high."""
    ordered = sorted(set(values))
    colors = {}
    for i, v in enumerate(ordered):
        t = i / max(1, len(ordered) - 1)
        r = int(round(40 + 200 * t))
        b = int(round(220 - 180 * t))
        colors[v] = f"#{r:02x}50{b:02x}"
    return colors

def _axis_lines(x_label, y_label, x_lo, x_hi, y_lo, y_hi):
    m, w, h = _MARGIN, _WIDTH, _HEIGHT
    parts = [
        f'<line x1="{m}" y1="{h - m}" x2="{w - m}" y2="{h - m}" '
        'stroke="black" stroke-width="1"/>',
        f'<line x1="{m}" y1="{m}" x2="{m}" y2="{h - m}" '
        'stroke="black" stroke-width="1"/>',
        f'<text x="{w // 2}" y="{h - 12}" font-size="13" '
        f'text-anchor="middle">{x_label}</text>',
        f'<text x="16" y="{h // 2}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 16 {h // 2})">{y_label}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv = x_lo + frac * (x_hi - x_lo)
        yv = y_lo + frac * (y_hi - y_lo)
        px = m + frac * (w - 2 * m)
        py = h - m - frac * (h - 2 * m)
        parts.append(f'<text x="{px:.2f}" y="{h - m + 16}" font-size="11" '
                     f'text-anchor="middle">{xv:.3g}</text>')
        parts.append(f'<text x="{m - 6}" y="{py:.2f}" font-size="11" '
                     f'text-anchor="end">{yv:.3g}</text>')
    return parts


def _scale(v, lo, hi, px_lo, px_hi):
    if hi == lo:
        return (px_lo + px_hi) / 2.0
    return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo)


def series_points(rows, value_field: str):
    """Per (mode, r_cluster): generation -> seed-averaged per-seed best value."""
    groups = {}
    for row in rows:
        key = (row.mode, row.r_cluster)
        cell = groups.setdefault(key, {}).setdefault(row.generation, {})
        v = getattr(row, value_field)
        cell[row.seed] = max(cell.get(row.seed, v), v)
    series = {}
    for key, by_gen in groups.items():
        series[key] = [(g, sum(bests.values()) / len(bests))
                       for g, bests in sorted(by_gen.items())]
    return series


def render_series_svg(rows, out_path, value_field: str = "accuracy",
                      y_label: str = None) -> None:
    """Polyline per (mode, resource level): solid tagged, dashed untagged."""
    if not rows:
        raise DataError("no rows to plot")
    series = series_points(rows, value_field)
    xs = [g for pts in series.values() for g, _ in pts]
    ys = [v for pts in series.values() for _, v in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if y_lo == y_hi:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    colors = _palette([r for _, r in series])
    m, w, h = _MARGIN, _WIDTH, _HEIGHT
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" '
             f'height="{h}" viewBox="0 0 {w} {h}">',
             f'<rect width="{w}" height="{h}" fill="white"/>']
    parts += _axis_lines("generation", y_label or value_field,
                         x_lo, x_hi, y_lo, y_hi)
    legend_y = m
    for (mode, r), pts in sorted(series.items()):
        coords = " ".join(
            f"{_scale(g, x_lo, x_hi, m, w - m):.2f},"
            f"{_scale(v, y_lo, y_hi, h - m, m):.2f}" for g, v in pts)
        dash = '' if mode == "tagged" else ' stroke-dasharray="6 4"'
        parts.append(f'<polyline points="{coords}" fill="none" '
                     f'stroke="{colors[r]}" stroke-width="2"{dash}/>')
        parts.append(f'<text x="{w - m - 150}" y="{legend_y}" font-size="11" '
                     f'fill="{colors[r]}">{mode} r={r:.3g}</text>')
        legend_y += 14
    parts.append("</svg>")
    Path(out_path).write_text("\n".join(parts) + "\n")


def scatter_points(rows, width: int = _WIDTH, height: int = _HEIGHT,
                   margin: int = _MARGIN):
    """Pixel positions for the final-generation storage/accuracy scatter."""
    if not rows:
        raise DataError("no rows to plot")
    final_gen = {}
    for row in rows:
        key = (row.mode, row.r_cluster, row.seed)
        final_gen[key] = max(final_gen.get(key, row.generation), row.generation)
    chosen = [r for r in rows
              if r.generation == final_gen[(r.mode, r.r_cluster, r.seed)]]
    x_lo = min(r.storage_bytes for r in chosen)
    x_hi = max(r.storage_bytes for r in chosen)
    y_lo = min(r.accuracy for r in chosen)
    y_hi = max(r.accuracy for r in chosen)
    pts = []
    for r in sorted(chosen, key=lambda r: (r.mode, r.r_cluster, r.seed,
                                           r.network_id)):
        px = _scale(r.storage_bytes, x_lo, x_hi, margin, width - margin)
        py = _scale(r.accuracy, y_lo, y_hi, height - margin, margin)
        pts.append((px, py, r.mode, r.r_cluster))
    return pts, (x_lo, x_hi, y_lo, y_hi)


def render_scatter_svg(rows, out_path) -> None:
    """Final-generation networks: storage on x, accuracy on y.

    Tagged networks render as diamonds, untagged as circles, colored by
    resource level.
    """
    pts, (x_lo, x_hi, y_lo, y_hi) = scatter_points(rows)
    colors = _palette([r for _, _, _, r in pts])
    m, w, h = _MARGIN, _WIDTH, _HEIGHT
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" '
             f'height="{h}" viewBox="0 0 {w} {h}">',
             f'<rect width="{w}" height="{h}" fill="white"/>']
    parts += _axis_lines("storage_bytes", "accuracy", x_lo, x_hi, y_lo, y_hi)
    for px, py, mode, r in pts:
        color = colors[r]
        if mode == "tagged":
            parts.append(
                f'<path d="M {px:.2f} {py - 5:.2f} L {px + 5:.2f} {py:.2f} '
                f'L {px:.2f} {py + 5:.2f} L {px - 5:.2f} {py:.2f} Z" '
                f'fill="{color}"/>')
        else:
            parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="4" '
                         f'fill="none" stroke="{color}" stroke-width="1.5"/>')
    legend_y = m
    for r in sorted(set(r for _, _, _, r in pts)):
        parts.append(f'<text x="{w - m - 150}" y="{legend_y}" font-size="11" '
                     f'fill="{colors[r]}">r={r:.3g} (diamond=tagged)</text>')
        legend_y += 14
    parts.append("</svg>")
    Path(out_path).write_text("\n".join(parts) + "\n")
