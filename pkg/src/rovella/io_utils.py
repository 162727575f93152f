"""Deterministic result files: CSV, JSON, and minimal native SVG charts.

CSV cells print floats with 17 significant digits (round-trip exact),
use LF endings and a header row. JSON is sorted-key, two-space indented.
Nothing here depends on wall clock or environment, so identical inputs
produce identical bytes.
"""

from __future__ import annotations

import json
import math
from pathlib import Path


def fmt_float(x) -> str:
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return format(float(x), ".17g")


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            cell if isinstance(cell, str) else fmt_float(cell) for cell in row
        ))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8",
                          newline="\n")


def _json_default(obj):
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _sanitize(obj):
    """Make summaries JSON-clean; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else format(obj)
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return _sanitize(obj.item())
    return obj


def write_json(path, payload: dict) -> None:
    text = json.dumps(_sanitize(payload), indent=2, sort_keys=True,
                      default=_json_default)
    Path(path).write_text(text + "\n", encoding="utf-8", newline="\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def svg_line_chart(path, xs, series: dict, title: str = "",
                   logx: bool = False, logy: bool = False,
                   width: int = 640, height: int = 420) -> None:
    """Static polyline chart; axes are linear in the (possibly logged)
    coordinates. Non-positive values are dropped on log scales."""
    margin = 50.0
    pts_by_name = {}
    all_x, all_y = [], []
    for name, ys in series.items():
        pts = []
        for x, y in zip(xs, ys):
            if logx and x <= 0 or logy and y <= 0:
                continue
            px = math.log10(x) if logx else float(x)
            py = math.log10(y) if logy else float(y)
            if math.isfinite(px) and math.isfinite(py):
                pts.append((px, py))
        pts_by_name[name] = pts
        all_x += [p[0] for p in pts]
        all_y += [p[1] for p in pts]
    if not all_x:
        Path(path).write_text(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}"><text x="20" y="20">{title}: no data</text></svg>\n',
            encoding="utf-8")
        return
    x0, x1 = min(all_x), max(all_x)
    y0, y1 = min(all_y), max(all_y)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(v):
        return margin + (v - x0) / (x1 - x0) * (width - 2 * margin)

    def sy(v):
        return height - margin - (v - y0) / (y1 - y0) * (height - 2 * margin)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{margin}" y="24" font-size="14">{title}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
    ]
    for i, (name, pts) in enumerate(pts_by_name.items()):
        if not pts:
            continue
        color = colors[i % len(colors)]
        coords = " ".join(f"{sx(px):.2f},{sy(py):.2f}" for px, py in pts)
        parts.append(f'<polyline points="{coords}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{width - margin + 4}" '
                     f'y="{margin + 16 * i + 10}" font-size="11" '
                     f'fill="{color}">{name}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8",
                          newline="\n")
