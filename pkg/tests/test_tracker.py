import numpy as np
import pytest

from uavmot.core import BBox, Detection, EventFrame, Modality, TrackStatus
from uavmot.metrics import predictions_from_results, evaluate
from uavmot.simulator import ScenarioConfig, generate
from uavmot.tracker import MMASortTracker, TrackerConfig, run_sequence


def _app(seed, dim=16):
    v = np.random.default_rng(seed).normal(size=dim)
    return v / np.linalg.norm(v)


def _det(frame, x, y, app, conf=0.9, w=12, h=8):
    return Detection(frame, BBox(x, y, w, h), conf, app)


def test_empty_frame():
    t = MMASortTracker()
    res = t.process_frame([], frame=1)
    assert res.frame == 1 and res.outputs == []


def test_single_detection_is_tentative():
    t = MMASortTracker()
    res = t.process_frame([_det(1, 10, 10, _app(0), conf=0.8)])
    assert res.outputs == []
    assert len(t.tracks) == 1 and t.tracks[0].status == TrackStatus.TENTATIVE


def test_confirmation_after_n_init():
    t = MMASortTracker()
    a = _app(0)
    outs = [t.process_frame([_det(f, 10 + f, 10, a)]).outputs for f in range(1, 5)]
    assert [len(o) for o in outs] == [0, 0, 1, 1]
    assert outs[2][0].track_id == 1


def test_low_confidence_detection_never_spawns():
    t = MMASortTracker()
    t.process_frame([_det(1, 10, 10, _app(0), conf=0.5)])
    assert t.tracks == []


def test_zero_frame_sequence():
    assert run_sequence({}) == []


def _reentry(gap):
    a = _app(1)
    dets = {f: [_det(f, 100 + 2 * f, 100, a)] for f in range(1, 11)}
    back = 10 + gap + 1
    for f in range(back, back + 5):
        dets[f] = [_det(f, 400 + f, 300, a)]  # far from the last position: IOU cannot help
    results = run_sequence(dets)
    return {r.frame: [o.track_id for o in r.outputs] for r in results}, back


def test_reentry_within_max_age_keeps_id():
    ids, back = _reentry(29)
    assert ids[10] == [1]
    assert ids[back] == [1]


def test_reentry_after_max_age_gets_new_id():
    ids, back = _reentry(31)
    assert ids[back] == []
    assert ids[back + 2] == [2]


def test_frame_order_enforced():
    t = MMASortTracker()
    t.process_frame([], frame=5)
    with pytest.raises(ValueError):
        t.process_frame([], frame=5)
    with pytest.raises(ValueError):
        t.process_frame([_det(7, 0, 0, None)], frame=6)


def test_mixed_modalities_rejected():
    d1 = _det(1, 0, 0, None)
    d2 = Detection(1, BBox(30, 30, 5, 5), 0.9, None, Modality.IR)
    with pytest.raises(ValueError):
        MMASortTracker().process_frame([d1, d2])


def test_event_frame_size_must_not_change():
    t = MMASortTracker()
    t.process_frame([], EventFrame.from_dense(np.zeros((10, 10), int)), frame=1)
    with pytest.raises(ValueError):
        t.process_frame([], EventFrame.from_dense(np.zeros((10, 12), int)), frame=2)


def _scenario(**kw):
    cfg = dict(seed=7, n_frames=120, loc_noise_std=1.0, appearance_noise_std=0.03, miss_rate=0.05,
               fp_rate=0.3, clutter=True)
    cfg.update(kw)
    return generate(ScenarioConfig(**cfg))


def _dump(results):
    return [(r.frame, [(o.track_id, o.bbox.to_array().tolist(), o.confidence) for o in r.outputs])
            for r in results]


def test_deterministic():
    sc = _scenario()
    a = run_sequence(sc.detections_by_frame, sc.event_frames_by_frame)
    b = run_sequence(sc.detections_by_frame, sc.event_frames_by_frame)
    assert _dump(a) == _dump(b)


def test_motion_off_ignores_events():
    sc = _scenario()
    cfg = TrackerConfig(use_motion_embedding=False)
    with_ev = run_sequence(sc.detections_by_frame, sc.event_frames_by_frame, cfg)
    without = run_sequence(sc.detections_by_frame, None, cfg, frames=range(1, 121))
    assert _dump(with_ev) == _dump(without)


def test_outputs_valid_each_frame():
    sc = _scenario()
    t = MMASortTracker()
    seen_ids: set[int] = set()
    for f in sc.frames:
        res = t.process_frame(sc.detections_by_frame[f], sc.event_frames_by_frame[f], frame=f)
        ids = [o.track_id for o in res.outputs]
        assert len(ids) == len(set(ids))
        for o in res.outputs:
            assert np.all(np.isfinite(o.bbox.to_array()))
        new = {tr.id for tr in t.tracks} - seen_ids
        # fresh ids are never reused and always exceed earlier ones
        assert all(i > max(seen_ids, default=0) for i in new)
        seen_ids |= new
    assert min(seen_ids) == 1


def test_noiseless_scenario_tracked_perfectly():
    sc = generate(ScenarioConfig(seed=11, n_uavs=3, n_frames=300))
    res = run_sequence(sc.detections_by_frame, sc.event_frames_by_frame, TrackerConfig(n_init=1))
    r = evaluate(sc.ground_truth, predictions_from_results(res))
    assert r.id_switches == 0
    assert r.mota == 1.0 and r.idf1 == 1.0 and r.hota == 1.0


def test_noiseless_scenario_default_config_on_sparse_annotations():
    # with the default n_init=3 the first two frames of each entry are tentative;
    # sparse annotations every 20 frames do not land there for these seeds
    for seed in range(5):
        sc = generate(ScenarioConfig(seed=seed, n_frames=300, annotation_interval=20, exit_reentry_rate=0.0))
        res = run_sequence(sc.detections_by_frame, sc.event_frames_by_frame)
        r = evaluate(sc.ground_truth, predictions_from_results(res))
        assert r.id_switches == 0 and r.mota == 1.0 and r.idf1 == 1.0


@pytest.mark.parametrize("kw", [dict(det_conf_min=0.8, new_track_conf=0.7), dict(n_init=0), dict(max_age=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        TrackerConfig(**kw)


def test_stage_one_consumes_detection_before_lost_tracks():
    # a confirmed track and a lost track share an appearance; the detection sits on
    # the confirmed track, so stage 1 takes it and the lost track stays lost
    a = _app(3)
    t = MMASortTracker()
    for f in range(1, 4):
        t.process_frame([_det(f, 10, 10, a), _det(f, 200, 200, a)])
    t.process_frame([_det(4, 10, 10, a)])
    lost = [tr for tr in t.tracks if tr.status == TrackStatus.LOST]
    assert len(lost) == 1
    res = t.process_frame([_det(5, 10, 10, a)])
    assert [o.track_id for o in res.outputs] == [1]
    assert [tr.status for tr in t.tracks if tr.id == 2] == [TrackStatus.LOST]
