"""Command-line entry point: ``uavmot {track,eval,simulate,attrs,report}``.

Exit codes: 0 on success, 2 on usage or input errors, 1 on internal errors.
``UAVMOT_THREADS`` caps the number of worker threads used across sequences.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io
from . import report
from .metrics import CSV_COLUMNS, GroundTruth, evaluate, read_report_csv, report_rows, write_report_csv
from .simulator import AttributeReport, classify_attributes, generate
from .tracker import run_sequence


class InputError(Exception):
    """Bad user input; reported with exit code 2."""


def max_threads() -> int:
    raw = os.environ.get("UAVMOT_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"UAVMOT_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise InputError(f"UAVMOT_THREADS must be a positive integer, got {raw!r}")
    return n


def _map(fn, items):
    """Ordered map, threaded up to ``UAVMOT_THREADS`` workers."""
    items = list(items)
    n = min(max_threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _load_config(path: Optional[str]) -> io.RunConfig:
    return io.read_run_config(path) if path else io.RunConfig()


# ------------------------------------------------------------------ track


def cmd_track(args) -> int:
    cfg = _load_config(args.config)
    dets_path = args.dets or cfg.dets
    out_path = args.out or cfg.out
    if not dets_path:
        raise InputError("--dets is required")
    if not out_path:
        raise InputError("--out is required")
    events_path = args.events or cfg.events
    emb_path = args.emb or cfg.emb

    embeddings = io.read_embeddings(emb_path) if emb_path else None
    dets = io.detections_from_records(io.read_mot(dets_path), embeddings)
    events = io.read_event_frames(events_path) if events_path else None
    results = run_sequence(dets, events, cfg.tracker_config())
    io.write_mot(out_path, io.records_from_results(results))
    return 0


# ------------------------------------------------------------------- eval


def _seq_names(paths: Sequence[str]) -> list[str]:
    names, seen = [], {}
    for p in paths:
        path = Path(p)
        name = path.stem if path.stem not in ("gt", "gt_rgb", "gt_ir") else (path.parent.name or path.stem)
        k = seen.get(name, 0)
        seen[name] = k + 1
        names.append(name if k == 0 else f"{name}_{k + 1}")
    return names


def _eval_one(pair):
    gt_path, pred_path = pair
    gt = io.ground_truth_from_records(io.read_mot(gt_path))
    pred = io.predictions_from_records(io.read_mot(pred_path))
    try:
        return evaluate(gt, pred)
    except ValueError as exc:
        raise InputError(f"{pred_path}: {exc}") from None


def cmd_eval(args) -> int:
    if len(args.gt) != len(args.pred):
        raise InputError("give one --pred per --gt")
    reports = _map(_eval_one, zip(args.gt, args.pred))
    names = _seq_names(args.gt)
    rows = write_report_csv(args.out, zip(names, reports))
    base = Path(args.out).resolve().parent
    report.write_sources(report.sources_path(args.out), [
        (n, os.path.relpath(Path(g).resolve(), base), os.path.relpath(Path(p).resolve(), base))
        for n, g, p in zip(names, args.gt, args.pred)])
    print(",".join(CSV_COLUMNS))
    print(",".join(rows[-1]))
    return 0


# --------------------------------------------------------------- simulate


def _attr_lines(rep: AttributeReport) -> list[str]:
    lines = []
    for name, res in rep.results.items():
        status = "skipped" if res.present is None else ("pass" if res.present else "fail")
        stat = "-" if res.statistic is None else f"{res.statistic:.4f}"
        lines.append(f"{name} {status} {stat}")
    return lines


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    try:
        scfg = cfg.scenario_config()
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid simulator config: {exc}") from None
    sc = generate(scfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    gt_recs = [io.MotRecord(f, o.identity, o.bbox, 1.0, (1.0 if o.visible else 0.0, -1.0, -1.0))
               for f, objs in sc.ground_truth.frames.items() for o in objs]
    io.write_mot(out / "gt.txt", gt_recs)
    # detections keep their in-frame order so embeddings join on (frame, det_index)
    with open(out / "dets.txt", "w") as fh:
        for f in sorted(sc.detections_by_frame):
            for d in sc.detections_by_frame[f]:
                fh.write(io.format_mot_line(io.MotRecord(f, -1, d.bbox, d.confidence)) + "\n")
    io.write_embeddings(out / "emb.txt", io.embeddings_from_detections(sc.detections_by_frame))
    io.write_event_frames(out / "events.evt", sc.event_frames_by_frame)
    with open(out / "attrs.txt", "w") as fh:
        fh.write("\n".join(_attr_lines(sc.attribute_report)) + "\n")
    return 0


# ------------------------------------------------------------------ attrs


def _read_brightness(path: str) -> list[float]:
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0]
            for tok in text.split():
                try:
                    values.append(float(tok))
                except ValueError:
                    raise io.FormatError(path, lineno, f"non-numeric brightness {tok!r}") from None
    if not values:
        raise io.FormatError(path, None, "no brightness values")
    return values


def cmd_attrs(args) -> int:
    gt = io.ground_truth_from_records(io.read_mot(args.gt))
    gt2 = io.ground_truth_from_records(io.read_mot(args.gt2)) if args.gt2 else None
    brightness = _read_brightness(args.brightness) if args.brightness else None
    for line in _attr_lines(classify_attributes(gt, gt2, brightness)):
        print(line)
    return 0


# ----------------------------------------------------------------- report


def _run_names(paths: Sequence[str]) -> list[str]:
    names, seen = [], {}
    for p in paths:
        name = Path(p).stem
        k = seen.get(name, 0)
        seen[name] = k + 1
        names.append(name if k == 0 else f"{name}_{k + 1}")
    return names


def _svg_for(job):
    out_dir, run, seq, gt_path, pred_path = job
    gt = io.predictions_from_records([r for r in io.read_mot(gt_path) if r.extra[0] != 0])
    pred = io.predictions_from_records(io.read_mot(pred_path))
    w, h = report.extent(gt, pred)
    svg = report.trajectory_svg(gt, pred, w, h, title=f"{run} / {seq}")
    (out_dir / f"{run}_{seq}.svg").write_text(svg)


def cmd_report(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    runs, jobs = [], []
    for path, run in zip(args.eval, _run_names(args.eval)):
        try:
            rows = read_report_csv(path)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        runs.append((run, rows))
        side = report.sources_path(path)
        if not side.exists():
            print(f"{path}: no {side.name}; skipping trajectory plots", file=sys.stderr)
            continue
        base = side.resolve().parent
        for seq, (g, p) in report.read_sources(side).items():
            jobs.append((out, run, seq, base / g, base / p))
    report.write_comparison_csv(out / "comparison.csv", runs)
    _map(_svg_for, jobs)
    return 0


# ------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavmot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="run the tracker on a detection file")
    p.add_argument("--dets", help="MOT-format detections (id = -1)")
    p.add_argument("--events", help="event frames file (EVT format)")
    p.add_argument("--emb", help="appearance embeddings, 'frame det_index v1 ... vD' per line")
    p.add_argument("--config", help="key = value run configuration")
    p.add_argument("--out", help="where to write MOT-format tracks")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="score predicted tracks against ground truth")
    p.add_argument("--gt", action="append", required=True, help="ground truth MOT file (repeat per sequence)")
    p.add_argument("--pred", action="append", required=True, help="predicted MOT file, paired with --gt in order")
    p.add_argument("--out", required=True, help="CSV report path (seq,MOTA,HOTA,IDF1,IDSW,FP,FN)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="generate a synthetic scenario")
    p.add_argument("--config", help="key = value run configuration (simulator keys)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("attrs", help="label a sequence with challenge attributes")
    p.add_argument("--gt", required=True, help="ground truth MOT file (RGB)")
    p.add_argument("--gt2", help="ground truth MOT file of the second modality (IR)")
    p.add_argument("--brightness", help="whitespace-separated mean RGB brightness values")
    p.set_defaults(func=cmd_attrs)

    p = sub.add_parser("report", help="SVG trajectory overlays and a comparison table")
    p.add_argument("--eval", nargs="+", required=True, help="evaluation CSVs written by 'uavmot eval'")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (InputError, io.FormatError, OSError) as exc:
        print(f"uavmot {args.command}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"uavmot {args.command}: invalid input: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"uavmot {args.command}: internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
