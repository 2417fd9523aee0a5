import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from uavmot.core import BBox, EventFrame
from uavmot.fusion_kernels import FeatureGrid
from uavmot.io import (FormatError, MotRecord, RunConfig, detections_from_records, ground_truth_from_records,
                       parse_mot_line, read_embeddings, read_event_frames, read_grid, read_mot, read_run_config,
                       write_embeddings, write_event_frames, write_grid, write_mot, write_run_config)
from uavmot.simulator import ScenarioConfig
from uavmot.tracker import TrackerConfig


def test_parse_detection_line():
    r = parse_mot_line("1,-1,10,20,5,5,0.9,-1,-1,-1")
    assert (r.frame, r.id, r.conf) == (1, -1, 0.9)
    assert r.bbox == BBox(10, 20, 5, 5)
    r = parse_mot_line("3,7,0,0,2,2,1,-1,-1,-1")
    assert (r.frame, r.id) == (3, 7)
    r = parse_mot_line("3,7,0,0,2,2,1,-1,-1,-1,99,extra")
    assert r.extra == (-1, -1, -1)


@pytest.mark.parametrize("line", ["1,-1,a,20,5,5", "1,-1,10,20,0,5,0.9", "1,-1,10,20,5,-2", "1,2,3", "1.5,1,0,0,1,1"])
def test_parse_rejects_bad_lines(tmp_path, line):
    p = tmp_path / "bad.txt"
    p.write_text("1,-1,10,20,5,5,0.9,-1,-1,-1\n" + line + "\n")
    with pytest.raises(FormatError, match=":2:"):
        read_mot(p)


def test_mot_roundtrip_bytes(tmp_path):
    text = ("1,1,10.50,20.25,5.00,5.00,1.00,1,-1,-1\n"
            "1,2,0.00,0.00,2.00,2.00,0.87,0,-1,-1\n"
            "2,1,11.00,21.00,5.00,5.00,1.00,1,-1,-1\n")
    p = tmp_path / "gt.txt"
    p.write_text(text)
    q = tmp_path / "out.txt"
    write_mot(q, read_mot(p))
    assert q.read_text() == text


def test_write_mot_sorted_and_empty(tmp_path):
    recs = [MotRecord(2, 1, BBox(0, 0, 1, 1), 1.0), MotRecord(1, 5, BBox(0, 0, 1, 1), 1.0),
            MotRecord(1, 2, BBox(0, 0, 1, 1), 1.0)]
    write_mot(tmp_path / "a.txt", recs)
    write_mot(tmp_path / "b.txt", list(reversed(recs)))
    lines = (tmp_path / "a.txt").read_text().splitlines()
    assert [ln.split(",")[:2] for ln in lines] == [["1", "2"], ["1", "5"], ["2", "1"]]
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    write_mot(tmp_path / "e.txt", [])
    assert (tmp_path / "e.txt").read_text() == ""


def test_gt_visibility_and_detections_join(tmp_path):
    recs = [MotRecord(1, 1, BBox(0, 0, 4, 4), 1.0, (1, -1, -1)), MotRecord(1, 2, BBox(9, 9, 4, 4), 1.0, (0, -1, -1))]
    gt = ground_truth_from_records(recs)
    assert [o.visible for o in gt.frames[1]] == [True, False]
    dets = [MotRecord(1, -1, BBox(0, 0, 4, 4), 0.9), MotRecord(1, -1, BBox(5, 5, 4, 4), 0.8)]
    emb = {(1, 1): np.array([0.0, 1.0])}
    by_frame = detections_from_records(dets, emb)
    assert by_frame[1][0].appearance is None
    assert np.array_equal(by_frame[1][1].appearance, [0.0, 1.0])


def test_event_example(tmp_path):
    p = tmp_path / "e.evt"
    p.write_text("EVT 346 260 1\nF 1 1\n10 10 3\n")
    ev = read_event_frames(p)
    assert (ev[1].width, ev[1].height) == (346, 260)
    assert ev[1].n_events == 1 and ev[1].values[10, 10] == 3
    p.write_text("EVT 346 260 1\nF 1 0\n")
    assert read_event_frames(p)[1].n_events == 0


@pytest.mark.parametrize("body, msg", [
    ("EVT 4 4 1\nF 1 2\n1 1 1\n1 1 2\n", "duplicate"),
    ("EVT 4 4 1\nF 1 1\n1 1 0\n", "background"),
    ("EVT 4 4 1\nF 1 1\n4 1 1\n", "outside"),
    ("EVT 4 4 2\nF 1 0\n", "ends early"),
    ("EVT 4 4 1\nF 1 0\n1 1 1\n", "trailing"),
    ("EVX 4 4 1\n", "header"),
])
def test_event_errors(tmp_path, body, msg):
    p = tmp_path / "e.evt"
    p.write_text(body)
    with pytest.raises(FormatError, match=msg):
        read_event_frames(p)


pixels = st.lists(st.tuples(st.integers(0, 19), st.integers(0, 14), st.integers(-5, 5).filter(bool)),
                  max_size=40, unique_by=lambda t: (t[0], t[1]))


@settings(suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.lists(pixels, min_size=1, max_size=4))
def test_event_roundtrip(tmp_path, frames):
    evs = {i + 1: EventFrame(20, 15, np.array([p[0] for p in px], dtype=np.int64),
                             np.array([p[1] for p in px], dtype=np.int64),
                             np.array([p[2] for p in px], dtype=np.int64)) for i, px in enumerate(frames)}
    p = tmp_path / "rt.evt"
    write_event_frames(p, evs)
    back = read_event_frames(p)
    assert sorted(back) == sorted(evs)
    for k in evs:
        assert np.array_equal(back[k].values, evs[k].values)
    q = tmp_path / "rt2.evt"
    write_event_frames(q, back)
    assert p.read_bytes() == q.read_bytes()


def test_embeddings(tmp_path):
    p = tmp_path / "emb.txt"
    p.write_text("1 0 3 4\n")
    e = read_embeddings(p)
    assert np.allclose(e[(1, 0)], [0.6, 0.8])
    assert abs(np.linalg.norm(e[(1, 0)]) - 1) <= 1e-6
    p.write_text("1 0 3 4\n1 1 1 2 3\n")
    with pytest.raises(FormatError, match=":2:"):
        read_embeddings(p)


def test_embeddings_roundtrip(tmp_path, rng):
    emb = {(f, i): v / np.linalg.norm(v) for f in range(1, 4) for i in range(3) for v in [rng.normal(size=16)]}
    write_embeddings(tmp_path / "e.txt", emb)
    back = read_embeddings(tmp_path / "e.txt")
    assert back.keys() == emb.keys()
    for k in emb:
        assert np.allclose(back[k], emb[k], atol=1e-8)


def test_grid_roundtrip(tmp_path, rng):
    g = FeatureGrid(np.array([[[1.5]]]))
    write_grid(tmp_path / "g1", g)
    assert np.array_equal(read_grid(tmp_path / "g1").values, g.values)
    g = FeatureGrid(rng.normal(size=(3, 4, 5)))
    write_grid(tmp_path / "g2", g)
    assert np.max(np.abs(read_grid(tmp_path / "g2").values - g.values)) <= 1e-9


@pytest.mark.parametrize("body", ["GRID 1 1\n1\n", "GRD 1 1 1\n1\n", "GRID 1 1 2\n1\n", "GRID 1 1 1\nx\n", ""])
def test_grid_errors(tmp_path, body):
    p = tmp_path / "g"
    p.write_text(body)
    with pytest.raises(FormatError):
        read_grid(p)


def test_run_config_defaults_match_components():
    rc = RunConfig()
    assert rc.tracker_config() == TrackerConfig()
    assert rc.scenario_config() == ScenarioConfig()


def test_run_config_roundtrip_and_errors(tmp_path):
    rc = RunConfig(n_init=1, theta_app=0.15, use_motion_embedding=False, speed_profile="fast",
                   gap_range=(3, 9), brightness=42.5, dets="d.txt")
    p = tmp_path / "run.cfg"
    write_run_config(p, rc)
    assert read_run_config(p) == rc
    p.write_text("# comment\nn_init = 2  # trailing\n\n")
    assert read_run_config(p).n_init == 2
    for body, msg in [("bogus = 1\n", "unknown"), ("n_init = 1\nn_init = 2\n", "duplicate"),
                      ("n_init = two\n", "cannot parse"), ("n_init\n", "key = value")]:
        p.write_text(body)
        with pytest.raises(FormatError, match=msg):
            read_run_config(p)


@settings(suppress_health_check=[HealthCheck.function_scoped_fixture], max_examples=60)
@given(st.binary(max_size=200))
def test_readers_only_raise_format_errors(tmp_path, data):
    p = tmp_path / "junk"
    p.write_bytes(data)
    for reader in (read_mot, read_event_frames, read_embeddings, read_grid, read_run_config):
        try:
            reader(p)
        except FormatError:
            pass
