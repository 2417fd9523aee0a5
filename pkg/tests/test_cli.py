import csv
import re
import subprocess
import sys

import pytest

from uavmot.cli import build_parser, main
from uavmot.io import read_embeddings, read_event_frames, read_mot


@pytest.fixture
def sim_dir(tmp_path):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("seed = 3\nn_uavs = 3\nn_frames = 120\n")
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    return out


@pytest.fixture
def track_cfg(tmp_path):
    p = tmp_path / "track.cfg"
    p.write_text("n_init = 1\n")
    return p


def _track(sim, cfg, out):
    return main(["track", "--dets", str(sim / "dets.txt"), "--events", str(sim / "events.evt"),
                 "--emb", str(sim / "emb.txt"), "--config", str(cfg), "--out", str(out)])


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_outputs_parse(sim_dir, tmp_path):
    for name in ("gt.txt", "dets.txt", "emb.txt", "events.evt", "attrs.txt"):
        assert (sim_dir / name).exists()
    gt = read_mot(sim_dir / "gt.txt")
    assert {r.id for r in gt} <= {1, 2, 3, 4}
    dets = read_mot(sim_dir / "dets.txt")
    assert all(r.id == -1 for r in dets)
    assert len(read_embeddings(sim_dir / "emb.txt")) == len(dets)
    assert len(read_event_frames(sim_dir / "events.evt")) == 120
    attrs = (sim_dir / "attrs.txt").read_text().split("\n")
    assert [ln.split()[0] for ln in attrs if ln] == ["TT", "ET", "SV", "FM", "LI", "SC", "OO"]


def test_simulate_deterministic(sim_dir, tmp_path):
    cfg = tmp_path / "sim.cfg"
    again = tmp_path / "again"
    assert main(["simulate", "--config", str(cfg), "--out", str(again)]) == 0
    for name in ("gt.txt", "dets.txt", "emb.txt", "events.evt", "attrs.txt"):
        assert (sim_dir / name).read_bytes() == (again / name).read_bytes()


def test_simulate_invalid_config(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n_uavs = 7\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2
    cfg.write_text("colour = red\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2


def test_track_then_eval_zero_noise(sim_dir, track_cfg, tmp_path, capsys):
    p1, p2 = tmp_path / "p1.txt", tmp_path / "p2.txt"
    assert _track(sim_dir, track_cfg, p1) == 0
    assert _track(sim_dir, track_cfg, p2) == 0
    assert p1.read_bytes() == p2.read_bytes()
    out_csv = tmp_path / "eval.csv"
    assert main(["eval", "--gt", str(sim_dir / "gt.txt"), "--pred", str(p1), "--out", str(out_csv)]) == 0
    combined = _rows(out_csv)[-1]
    assert combined["seq"] == "COMBINED"
    assert (float(combined["MOTA"]), float(combined["IDF1"]), float(combined["HOTA"]), combined["IDSW"]) == \
        (1.0, 1.0, 1.0, "0")
    assert "COMBINED" in capsys.readouterr().out


def test_track_missing_or_bad_inputs(tmp_path):
    assert main(["track", "--out", str(tmp_path / "o.txt")]) == 2
    assert main(["track", "--dets", str(tmp_path / "nope.txt"), "--out", str(tmp_path / "o.txt")]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("1,-1,0,0,0,5,0.9\n")
    assert main(["track", "--dets", str(bad), "--out", str(tmp_path / "o.txt")]) == 2


def _write(path, lines):
    path.write_text("".join(ln + "\n" for ln in lines))
    return path


def test_eval_hand_instances(tmp_path):
    gt = _write(tmp_path / "gt.txt", [f"{f},1,{10 * f},0,10,10,1,1,-1,-1" for f in range(1, 11)])
    pred = _write(tmp_path / "pred.txt",
                  [f"{f},1,{10 * f},0,10,10,1,-1,-1,-1" for f in range(1, 6)] + ["6,1,300,300,10,10,1,-1,-1,-1"]
                  + [f"{f},2,{10 * f},0,10,10,1,-1,-1,-1" for f in range(7, 11)])
    assert main(["eval", "--gt", str(gt), "--pred", str(pred), "--out", str(tmp_path / "e.csv")]) == 0
    row = _rows(tmp_path / "e.csv")[0]
    assert float(row["MOTA"]) == pytest.approx(0.7, abs=1e-6)
    assert (row["IDSW"], row["FP"], row["FN"]) == ("1", "1", "1")

    assert main(["eval", "--gt", str(gt), "--pred", str(gt), "--out", str(tmp_path / "p.csv")]) == 0
    row = _rows(tmp_path / "p.csv")[0]
    assert [float(row[k]) for k in ("MOTA", "HOTA", "IDF1")] == [1.0, 1.0, 1.0] and row["IDSW"] == "0"

    empty = _write(tmp_path / "empty.txt", [])
    assert main(["eval", "--gt", str(gt), "--pred", str(empty), "--out", str(tmp_path / "z.csv")]) == 0
    row = _rows(tmp_path / "z.csv")[0]
    assert float(row["MOTA"]) == 0.0 and float(row["IDF1"]) == 0.0

    dup = _write(tmp_path / "dup.txt", ["1,1,0,0,10,10,1,-1,-1,-1", "1,1,50,0,10,10,1,-1,-1,-1"])
    assert main(["eval", "--gt", str(gt), "--pred", str(dup), "--out", str(tmp_path / "d.csv")]) == 2


def test_attrs(tmp_path, capsys):
    gt = _write(tmp_path / "gt.txt", [f"{f},1,{70 * f},0,10,10,1,1,-1,-1" for f in range(1, 11)])
    bright = _write(tmp_path / "b.txt", ["40", "50"])
    assert main(["attrs", "--gt", str(gt), "--gt2", str(gt), "--brightness", str(bright)]) == 0
    lines = dict(ln.split(" ", 1) for ln in capsys.readouterr().out.splitlines())
    assert lines["TT"].startswith("pass")
    assert lines["FM"].startswith("pass")
    assert lines["LI"] == "pass 45.0000"
    assert main(["attrs", "--gt", str(gt)]) == 0
    lines = dict(ln.split(" ", 1) for ln in capsys.readouterr().out.splitlines())
    assert lines["TT"] == "skipped -" and lines["LI"] == "skipped -"
    empty = _write(tmp_path / "e.txt", [])
    assert main(["attrs", "--gt", str(empty)]) == 0
    assert all(not ln.split()[1] == "pass" for ln in capsys.readouterr().out.splitlines())


def test_report(sim_dir, track_cfg, tmp_path):
    pred = tmp_path / "pred.txt"
    assert _track(sim_dir, track_cfg, pred) == 0
    ev = tmp_path / "runA.csv"
    assert main(["eval", "--gt", str(sim_dir / "gt.txt"), "--pred", str(pred), "--out", str(ev)]) == 0
    out = tmp_path / "rep"
    assert main(["report", "--eval", str(ev), str(ev), "--out", str(out)]) == 0
    svg = (out / "runA_sim.svg").read_text()
    assert svg.startswith('<?xml version="1.0" encoding="UTF-8"?>\n<svg xmlns="http://www.w3.org/2000/svg"')
    n_gt = len({r.id for r in read_mot(sim_dir / "gt.txt")})
    n_pred = len({r.id for r in read_mot(pred)})
    assert len(re.findall(r'<polyline class="gt"', svg)) == n_gt
    assert len(re.findall(r'<polyline class="pred"', svg)) == n_pred
    rows = _rows(out / "comparison.csv")
    assert [r["run"] for r in rows] == ["runA"] * 2 + ["runA_2"] * 2
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert main(["report", "--eval", str(ev), str(ev), "--out", str(out)]) == 0
    assert first == {p.name: p.read_bytes() for p in out.iterdir()}


def test_threads_env(sim_dir, tmp_path, monkeypatch):
    gt = str(sim_dir / "gt.txt")
    monkeypatch.setenv("UAVMOT_THREADS", "zero")
    assert main(["eval", "--gt", gt, "--pred", gt, "--out", str(tmp_path / "a.csv")]) == 2
    monkeypatch.setenv("UAVMOT_THREADS", "3")
    assert main(["eval", "--gt", gt, "--gt", gt, "--pred", gt, "--pred", gt, "--out", str(tmp_path / "b.csv")]) == 0
    monkeypatch.setenv("UAVMOT_THREADS", "1")
    assert main(["eval", "--gt", gt, "--gt", gt, "--pred", gt, "--pred", gt, "--out", str(tmp_path / "c.csv")]) == 0
    assert (tmp_path / "b.csv").read_bytes() == (tmp_path / "c.csv").read_bytes()


@pytest.mark.parametrize("command", ["track", "eval", "simulate", "attrs", "report"])
def test_help(command, capsys):
    assert main([command, "--help"]) == 0
    text = capsys.readouterr().out
    sub = build_parser()._subparsers._group_actions[0].choices[command]
    for action in sub._actions:
        for flag in action.option_strings:
            assert flag in text


def test_usage_error_exit_code():
    assert main(["track", "--bogus"]) == 2
    assert main([]) == 2


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "uavmot.cli", "eval", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "--pred" in res.stdout
