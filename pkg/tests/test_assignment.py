import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from uavmot.assignment import linear_assignment, solve


def brute_force(cost):
    """Minimum total over all full assignments of the smaller side."""
    n, m = cost.shape
    if n == 0 or m == 0:
        return 0.0
    if n <= m:
        return min(sum(cost[i, p[i]] for i in range(n)) for p in itertools.permutations(range(m), n))
    return min(sum(cost[p[j], j] for j in range(m)) for p in itertools.permutations(range(n), m))


def test_examples():
    a = solve([[0, 1], [1, 0]])
    assert [(r, c) for r, c, _ in a.matches] == [(0, 0), (1, 1)]
    assert a.total_cost == 0
    a = solve([[1, 2], [2, 4]], match_cost_max=10)
    assert [(r, c) for r, c, _ in a.matches] == [(0, 1), (1, 0)]
    assert a.total_cost == 4
    a = solve([[0.2, 1.0], [1.0, 1.0]], 0.999)
    assert [(r, c) for r, c, _ in a.matches] == [(0, 0)]
    assert a.unmatched_tracks == [1]
    assert a.unmatched_detections == [1]


def test_empty_shapes():
    a = solve(np.zeros((0, 3)))
    assert a.matches == [] and a.unmatched_detections == [0, 1, 2]
    a = solve(np.zeros((2, 0)))
    assert a.unmatched_tracks == [0, 1]


def test_rejects_non_finite():
    with pytest.raises(ValueError):
        linear_assignment([[np.inf, 1], [1, 1]])


matrices = st.tuples(st.integers(1, 6), st.integers(1, 6)).flatmap(
    lambda s: arrays(np.float64, s, elements=st.integers(0, 20).map(lambda k: k / 8)))


@given(matrices)
def test_matches_brute_force(cost):
    rows, cols = linear_assignment(cost)
    assert len(rows) == min(cost.shape)
    assert len(set(rows)) == len(rows) and len(set(cols)) == len(cols)
    assert cost[rows, cols].sum() == brute_force(cost)


@given(matrices, st.floats(0.05, 1))
def test_solve_partition_and_strip(cost, cmax):
    a = solve(cost, cmax)
    n, m = cost.shape
    rows = [r for r, _, _ in a.matches] + a.unmatched_tracks
    cols = [c for _, c, _ in a.matches] + a.unmatched_detections
    assert sorted(rows) == list(range(n))
    assert sorted(cols) == list(range(m))
    assert all(c < cmax for _, _, c in a.matches)


@given(matrices, st.randoms(use_true_random=False))
def test_permutation_equivariance(cost, rnd):
    n, m = cost.shape
    pr = list(range(n))
    pc = list(range(m))
    rnd.shuffle(pr)
    rnd.shuffle(pc)
    base = cost[linear_assignment(cost)].sum()
    permuted = cost[np.ix_(pr, pc)]
    r, c = linear_assignment(permuted)
    assert permuted[r, c].sum() == base


@given(st.integers(1, 6).flatmap(lambda n: arrays(np.float64, (n, n), elements=st.integers(0, 9).map(float))),
       st.integers(-5, 50))
def test_constant_shift_keeps_matching(cost, k):
    r1, c1 = linear_assignment(cost)
    r2, c2 = linear_assignment(cost + k)
    assert np.array_equal(r1, r2) and np.array_equal(c1, c2)


def test_ties_break_lexicographically():
    rows, cols = linear_assignment(np.zeros((3, 3)))
    assert cols.tolist() == [0, 1, 2]
    rows, cols = linear_assignment(np.ones((2, 4)))
    assert cols.tolist() == [0, 1]
    rows, cols = linear_assignment([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert cols.tolist() == [1, 2, 0]
