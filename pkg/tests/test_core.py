import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from uavmot.core import (BBox, Detection, EventFrame, MotionEmbedding, center_distance, iou, iou_matrix,
                         normalize_embedding)

coord = st.floats(-500, 500, allow_nan=False)
size = st.floats(0.5, 200, allow_nan=False)
boxes = st.builds(BBox, coord, coord, size, size)


def test_iou_examples():
    a = BBox(0, 0, 10, 10)
    assert iou(a, BBox(0, 0, 10, 10)) == 1.0
    assert iou(a, BBox(20, 20, 5, 5)) == 0.0
    assert iou(a, BBox(5, 0, 10, 10)) == pytest.approx(50 / 150, abs=1e-12)


def test_center_distance_examples():
    a = BBox(0, 0, 10, 10)
    assert center_distance(a, a) == 0.0
    assert center_distance(a, BBox(60, 0, 10, 10)) == 60.0
    assert center_distance(a, BBox(30, 40, 10, 10)) == 50.0


@pytest.mark.parametrize("args", [(0, 0, 0, 5), (0, 0, 5, -1), (math.nan, 0, 1, 1), (0, math.inf, 1, 1)])
def test_bbox_rejects_bad_geometry(args):
    with pytest.raises(ValueError):
        BBox(*args)


def test_bbox_center_roundtrip():
    b = BBox.from_center(105, 60, 10, 20)
    assert (b.x, b.y, b.w, b.h) == (100, 50, 10, 20)
    assert b.center == (105, 60)
    assert b.area == 200


@given(boxes, boxes)
def test_iou_symmetric_and_bounded(a, b):
    v = iou(a, b)
    assert v == iou(b, a)
    assert 0.0 <= v <= 1.0


@given(boxes)
def test_iou_self_is_one(a):
    assert iou(a, a) == pytest.approx(1.0, abs=1e-12)


@given(boxes, boxes, st.floats(-100, 100), st.floats(-100, 100))
def test_iou_translation_invariant(a, b, dx, dy):
    ta = BBox(a.x + dx, a.y + dy, a.w, a.h)
    tb = BBox(b.x + dx, b.y + dy, b.w, b.h)
    assert iou(ta, tb) == pytest.approx(iou(a, b), abs=1e-9)


@given(boxes, boxes, st.floats(0.1, 10))
def test_iou_scale_invariant(a, b, k):
    sa = BBox(a.x * k, a.y * k, a.w * k, a.h * k)
    sb = BBox(b.x * k, b.y * k, b.w * k, b.h * k)
    assert iou(sa, sb) == pytest.approx(iou(a, b), abs=1e-9)


@given(st.lists(boxes, max_size=5), st.lists(boxes, max_size=5))
def test_iou_matrix_matches_scalar(a, b):
    m = iou_matrix(np.array([x.to_array() for x in a]).reshape(-1, 4),
                   np.array([x.to_array() for x in b]).reshape(-1, 4))
    assert m.shape == (len(a), len(b))
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            assert m[i, j] == pytest.approx(iou(x, y), abs=1e-12)


def test_detection_normalizes_appearance():
    d = Detection(1, BBox(0, 0, 2, 2), 0.9, np.array([3.0, 4.0]))
    assert np.linalg.norm(d.appearance) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        Detection(1, BBox(0, 0, 2, 2), 1.2)
    with pytest.raises(ValueError):
        normalize_embedding(np.zeros(3))


def test_motion_embedding_invariants():
    e = MotionEmbedding.from_array([2, 0.5, 0.3, 0.5, 0.3, 0.6, 0.6])
    assert e.to_array().shape == (7,)
    assert MotionEmbedding().is_empty
    with pytest.raises(ValueError):
        MotionEmbedding.from_array([0, 0.5, 0, 0, 0, 0, 0])


def test_event_frame_sparse_and_dense():
    dense = np.zeros((4, 5), dtype=int)
    dense[1, 2] = 3
    dense[3, 0] = -1
    ef = EventFrame.from_dense(dense)
    assert ef.n_events == 2
    assert np.array_equal(ef.values, dense)
    assert ef.values.size == ef.width * ef.height
    with pytest.raises(ValueError):
        EventFrame(5, 4, np.array([5]), np.array([0]), np.array([1]))
