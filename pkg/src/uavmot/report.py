"""SVG trajectory overlays and cross-run comparison tables."""

from __future__ import annotations

import colorsys
import csv
import os
from pathlib import Path
from typing import Mapping, Sequence, Union
from xml.sax.saxutils import escape

from .core import BBox

PathLike = Union[str, os.PathLike]

COMPARISON_COLUMNS = ("run", "seq", "MOTA", "HOTA", "IDF1", "IDSW", "FP", "FN")


def id_color(track_id: int) -> str:
    """Stable, well-spread colour for an id (golden-ratio hue walk)."""
    hue = (track_id * 0.618033988749895) % 1.0
    r, g, b = colorsys.hls_to_rgb(hue, 0.45, 0.75)
    return "#{:02x}{:02x}{:02x}".format(round(r * 255), round(g * 255), round(b * 255))


def _centers_by_id(frames: Mapping[int, Sequence[tuple[int, BBox]]]) -> dict[int, list[tuple[float, float]]]:
    out: dict[int, list[tuple[float, float]]] = {}
    for f in sorted(frames):
        for ident, box in frames[f]:
            out.setdefault(int(ident), []).append(box.center)
    return out


def _polyline(points, color: str, cls: str, ident: int, dashed: bool) -> str:
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    dash = ' stroke-dasharray="4 3"' if dashed else ""
    return (f'  <polyline class="{cls}" data-id="{ident}" points="{pts}" fill="none" '
            f'stroke="{color}" stroke-width="{1.0 if dashed else 1.5}"{dash}/>')


def trajectory_svg(gt: Mapping[int, Sequence[tuple[int, BBox]]],
                   pred: Mapping[int, Sequence[tuple[int, BBox]]],
                   width: float, height: float, title: str = "") -> str:
    """One polyline per ground-truth id (dashed) and per predicted id (solid)."""
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" height="{height:g}" '
        f'viewBox="0 0 {width:g} {height:g}">',
        f'  <rect x="0" y="0" width="{width:g}" height="{height:g}" fill="white" stroke="black"/>',
    ]
    if title:
        lines.append(f"  <title>{escape(title)}</title>")
    for ident, pts in sorted(_centers_by_id(gt).items()):
        lines.append(_polyline(pts, "#808080", "gt", ident, dashed=True))
    for ident, pts in sorted(_centers_by_id(pred).items()):
        lines.append(_polyline(pts, id_color(ident), "pred", ident, dashed=False))
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def extent(*frame_maps: Mapping[int, Sequence[tuple[int, BBox]]]) -> tuple[float, float]:
    """Smallest canvas (rounded up to 10 px) containing every box."""
    w = h = 10.0
    for frames in frame_maps:
        for objs in frames.values():
            for _, b in objs:
                w, h = max(w, b.x2), max(h, b.y2)
    return float(-(-w // 10) * 10), float(-(-h // 10) * 10)


def write_comparison_csv(path: PathLike, runs: Sequence[tuple[str, Sequence[Mapping[str, str]]]]) -> None:
    """Long-format table: one row per (run, sequence), runs in the given order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COMPARISON_COLUMNS)
        for run, rows in runs:
            for row in rows:
                writer.writerow([run] + [row[c] for c in COMPARISON_COLUMNS[1:]])


def read_sources(path: PathLike) -> dict[str, tuple[str, str]]:
    """Read the ``seq,gt,pred`` sidecar written next to an evaluation CSV."""
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out[row["seq"]] = (row["gt"], row["pred"])
    return out


def write_sources(path: PathLike, sources: Sequence[tuple[str, str, str]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("seq", "gt", "pred"))
        writer.writerows(sources)


def sources_path(eval_csv: PathLike) -> Path:
    p = Path(eval_csv)
    return p.with_name(p.name + ".sources")

