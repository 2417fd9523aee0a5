"""CLEAR-MOT (MOTA, ID switches), IDF1 and HOTA evaluation.

Only annotated frames are scored. Predictions in frames without ground truth
are skipped rather than counted as false positives, which is how sparsely
annotated sequences are handled.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .assignment import linear_assignment
from .core import BBox, boxes_to_array, iou_matrix

HOTA_ALPHAS = np.arange(1, 20) * 0.05
_EPS = np.finfo(float).eps


class GTObject(NamedTuple):
    identity: int
    bbox: BBox
    visible: bool = True


@dataclass
class GroundTruth:
    """Per-frame annotations. ``annotated_frames`` defaults to frames with rows."""

    frames: dict[int, list[GTObject]] = field(default_factory=dict)
    annotated_frames: Optional[set[int]] = None

    def __post_init__(self):
        for f, objs in self.frames.items():
            ids = [o.identity for o in objs]
            if len(ids) != len(set(ids)):
                raise ValueError(f"duplicate ground-truth identity in frame {f}")
        if self.annotated_frames is None:
            self.annotated_frames = set(self.frames)
        else:
            self.annotated_frames = set(self.annotated_frames)

    @property
    def n_boxes(self) -> int:
        return sum(sum(1 for o in self.frames.get(f, ()) if o.visible) for f in self.annotated_frames)


# pred: frame -> sequence of (track_id, bbox[, ...])
Predictions = Mapping[int, Sequence]


@dataclass
class MetricReport:
    mota: float
    idf1: float
    hota: float
    id_switches: int
    fp: int
    fn: int
    hota_curve: list[float]
    n_gt: int = 0
    deta: float = 0.0
    assa: float = 0.0


def predictions_from_results(results) -> dict[int, list[tuple[int, BBox]]]:
    """Convert tracker :class:`~uavmot.tracker.FrameResult` objects to predictions."""
    return {r.frame: [(o.track_id, o.bbox) for o in r.outputs] for r in results}


@dataclass
class _Frame:
    gt_ids: np.ndarray
    pr_ids: np.ndarray
    sim: np.ndarray  # (n_gt, n_pred) IOU


def _prepare(gt: GroundTruth, pred: Predictions) -> list[_Frame]:
    """Align frames, validate ids and drop predictions on invisible GT."""
    out = []
    for f in sorted(gt.annotated_frames):
        objs = gt.frames.get(f, [])
        preds = list(pred.get(f, ()))
        pr_ids = [int(p[0]) for p in preds]
        if len(pr_ids) != len(set(pr_ids)):
            raise ValueError(f"duplicate predicted id in frame {f}")
        vis = [o for o in objs if o.visible]
        hidden = [o for o in objs if not o.visible]
        pr_boxes = boxes_to_array([p[1] for p in preds])
        if hidden and preds:
            # predictions that cover an invisible object are neither TP nor FP
            ignore_iou = iou_matrix(boxes_to_array([o.bbox for o in hidden]), pr_boxes)
            keep = ~(ignore_iou >= 0.5).any(axis=0)
            pr_boxes = pr_boxes[keep]
            pr_ids = [i for i, k in zip(pr_ids, keep) if k]
        sim = iou_matrix(boxes_to_array([o.bbox for o in vis]), pr_boxes)
        out.append(_Frame(np.array([o.identity for o in vis], dtype=np.int64),
                          np.array(pr_ids, dtype=np.int64), sim))
    return out


def _clear(frames: list[_Frame], iou_min: float) -> tuple[int, int, int, int, int]:
    """Returns (tp, fp, fn, idsw, n_gt) using CLEAR continuity matching."""
    tp = fp = fn = idsw = n_gt = 0
    last_match: dict[int, int] = {}  # gt id -> pred id of its most recent match
    prev_pairs: dict[int, int] = {}  # gt id -> pred id matched in the previous scored frame
    for fr in frames:
        n_g, n_p = len(fr.gt_ids), len(fr.pr_ids)
        n_gt += n_g
        if n_g == 0 or n_p == 0:
            fn += n_g
            fp += n_p
            continue
        score = fr.sim.copy()
        valid = score >= iou_min - _EPS
        # carry over last frame's correspondences before maximizing overlap
        for gi, g in enumerate(fr.gt_ids.tolist()):
            p = prev_pairs.get(g)
            if p is not None:
                hit = np.flatnonzero(fr.pr_ids == p)
                if hit.size and valid[gi, hit[0]]:
                    score[gi, hit[0]] += 1000.0
        score[~valid] = 0.0
        rows, cols = linear_assignment(-score)
        ok = valid[rows, cols]
        rows, cols = rows[ok], cols[ok]
        cur_pairs = {}
        for r, c in zip(rows.tolist(), cols.tolist()):
            g, p = int(fr.gt_ids[r]), int(fr.pr_ids[c])
            if g in last_match and last_match[g] != p:
                idsw += 1
            last_match[g] = p
            cur_pairs[g] = p
        prev_pairs = cur_pairs
        tp += len(rows)
        fn += n_g - len(rows)
        fp += n_p - len(rows)
    return tp, fp, fn, idsw, n_gt


def clear_mota(gt: GroundTruth, pred: Predictions, iou_min: float = 0.5) -> tuple[float, int, int, int]:
    """MOTA and its error counts ``(mota, fp, fn, idsw)``."""
    tp, fp, fn, idsw, n_gt = _clear(_prepare(gt, pred), iou_min)
    return _mota(tp, fp, idsw, n_gt), fp, fn, idsw


def _mota(tp: int, fp: int, idsw: int, n_gt: int) -> float:
    if n_gt == 0 and fp == 0:
        return 1.0
    return (tp - fp - idsw) / max(1, n_gt)


def _id_maps(frames: list[_Frame]):
    gt_ids = sorted({int(g) for fr in frames for g in fr.gt_ids})
    pr_ids = sorted({int(p) for fr in frames for p in fr.pr_ids})
    return {g: i for i, g in enumerate(gt_ids)}, {p: i for i, p in enumerate(pr_ids)}


def _identity_counts(frames: list[_Frame], iou_min: float):
    gmap, pmap = _id_maps(frames)
    overlap = np.zeros((len(gmap), len(pmap)))
    gt_count = np.zeros(len(gmap))
    pr_count = np.zeros(len(pmap))
    for fr in frames:
        gi = np.array([gmap[int(g)] for g in fr.gt_ids], dtype=np.int64)
        pi = np.array([pmap[int(p)] for p in fr.pr_ids], dtype=np.int64)
        np.add.at(gt_count, gi, 1)
        np.add.at(pr_count, pi, 1)
        if gi.size and pi.size:
            overlap[np.ix_(gi, pi)] += fr.sim >= iou_min - _EPS
    return overlap, gt_count, pr_count


def idf1(gt: GroundTruth, pred: Predictions, iou_min: float = 0.5) -> float:
    frames = _prepare(gt, pred)
    overlap, gt_count, pr_count = _identity_counts(frames, iou_min)
    n_gt, n_pr = gt_count.sum(), pr_count.sum()
    if n_gt + n_pr == 0:
        return 1.0
    idtp = 0.0
    if overlap.size:
        rows, cols = linear_assignment(-overlap)
        idtp = float(overlap[rows, cols].sum())
    idfn = n_gt - idtp
    idfp = n_pr - idtp
    return 2.0 * idtp / (2.0 * idtp + idfp + idfn)


def _hota(frames: list[_Frame]) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    gmap, pmap = _id_maps(frames)
    G, P = len(gmap), len(pmap)
    n_alpha = len(HOTA_ALPHAS)
    gt_count = np.zeros(G)
    pr_count = np.zeros(P)
    potential = np.zeros((G, P))
    idx = []
    for fr in frames:
        gi = np.array([gmap[int(g)] for g in fr.gt_ids], dtype=np.int64)
        pi = np.array([pmap[int(p)] for p in fr.pr_ids], dtype=np.int64)
        idx.append((gi, pi))
        np.add.at(gt_count, gi, 1)
        np.add.at(pr_count, pi, 1)
        if gi.size and pi.size:
            s = fr.sim
            denom = s.sum(0)[None, :] + s.sum(1)[:, None] - s
            norm = np.zeros_like(s)
            mask = denom > _EPS
            norm[mask] = s[mask] / denom[mask]
            potential[np.ix_(gi, pi)] += norm
    with np.errstate(invalid="ignore", divide="ignore"):
        align = potential / (gt_count[:, None] + pr_count[None, :] - potential)
    align = np.nan_to_num(align)

    tp = np.zeros(n_alpha)
    fn = np.zeros(n_alpha)
    fp = np.zeros(n_alpha)
    counts = np.zeros((n_alpha, G, P))
    for fr, (gi, pi) in zip(frames, idx):
        if gi.size == 0 or pi.size == 0:
            fn += gi.size
            fp += pi.size
            continue
        s = fr.sim
        score = align[np.ix_(gi, pi)] * s
        rows, cols = linear_assignment(-score)
        ok = s[rows, cols][None, :] >= HOTA_ALPHAS[:, None] - _EPS  # (n_alpha, k)
        n_ok = ok.sum(axis=1)
        tp += n_ok
        fn += gi.size - n_ok
        fp += pi.size - n_ok
        a_idx, k_idx = np.nonzero(ok)
        np.add.at(counts, (a_idx, gi[rows[k_idx]], pi[cols[k_idx]]), 1)

    assa = np.zeros(n_alpha)
    for a in range(n_alpha):
        m = counts[a]
        ass = m / np.maximum(1.0, gt_count[:, None] + pr_count[None, :] - m)
        assa[a] = float((m * ass).sum()) / max(1.0, tp[a])
    deta = tp / np.maximum(1.0, tp + fn + fp)
    curve = np.sqrt(deta * assa)
    if tp.sum() == 0 and fn.sum() == 0 and fp.sum() == 0:
        curve = np.ones(n_alpha)
        deta = assa = curve
    return float(curve.mean()), curve, deta, assa


def hota(gt: GroundTruth, pred: Predictions) -> tuple[float, list[float]]:
    """HOTA averaged over IOU thresholds 0.05..0.95, plus the per-threshold curve."""
    value, curve, _, _ = _hota(_prepare(gt, pred))
    return value, curve.tolist()


def evaluate(gt: GroundTruth, pred: Predictions, iou_min: float = 0.5) -> MetricReport:
    frames = _prepare(gt, pred)
    tp, fp, fn, idsw, n_gt = _clear(frames, iou_min)
    mota = _mota(tp, fp, idsw, n_gt)
    h, curve, deta, assa = _hota(frames)
    return MetricReport(
        mota=mota,
        idf1=idf1(gt, pred, iou_min),
        hota=h,
        id_switches=idsw,
        fp=fp,
        fn=fn,
        hota_curve=curve.tolist(),
        n_gt=n_gt,
        deta=float(deta.mean()),
        assa=float(assa.mean()),
    )


def aggregate(reports: Sequence[MetricReport]) -> MetricReport:
    """Micro-average over sequences, weighting by ground-truth box count."""
    n_gt = sum(r.n_gt for r in reports)
    fp = sum(r.fp for r in reports)
    fn = sum(r.fn for r in reports)
    idsw = sum(r.id_switches for r in reports)
    if n_gt == 0:
        w = np.full(len(reports), 1.0 / max(1, len(reports)))
    else:
        w = np.array([r.n_gt for r in reports], dtype=float) / n_gt
    curve = np.sum([wi * np.asarray(r.hota_curve) for wi, r in zip(w, reports)], axis=0) \
        if reports else np.zeros(len(HOTA_ALPHAS))
    return MetricReport(
        mota=_mota(n_gt - fn, fp, idsw, n_gt),
        idf1=float(sum(wi * r.idf1 for wi, r in zip(w, reports))),
        hota=float(sum(wi * r.hota for wi, r in zip(w, reports))),
        id_switches=idsw,
        fp=fp,
        fn=fn,
        hota_curve=list(np.asarray(curve, dtype=float)),
        n_gt=n_gt,
        deta=float(sum(wi * r.deta for wi, r in zip(w, reports))),
        assa=float(sum(wi * r.assa for wi, r in zip(w, reports))),
    )


CSV_COLUMNS = ("seq", "MOTA", "HOTA", "IDF1", "IDSW", "FP", "FN")


def report_rows(named: Iterable[tuple[str, MetricReport]]) -> list[list[str]]:
    named = list(named)
    rows = [[name, f"{r.mota:.6f}", f"{r.hota:.6f}", f"{r.idf1:.6f}", str(r.id_switches), str(r.fp), str(r.fn)]
            for name, r in named]
    agg = aggregate([r for _, r in named])
    rows.append(["COMBINED", f"{agg.mota:.6f}", f"{agg.hota:.6f}", f"{agg.idf1:.6f}",
                 str(agg.id_switches), str(agg.fp), str(agg.fn)])
    return rows


def write_report_csv(path, named: Iterable[tuple[str, MetricReport]]) -> list[list[str]]:
    rows = report_rows(named)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        writer.writerows(rows)
    return rows


def read_report_csv(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: expected columns {','.join(CSV_COLUMNS)}")
        return list(reader)
