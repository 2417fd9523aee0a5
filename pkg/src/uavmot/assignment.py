"""Minimum-cost linear assignment (Hungarian method) with deterministic ties.

The solver runs the shortest-augmenting-path Hungarian algorithm on a square
matrix and keeps its dual potentials. Every optimal assignment lives on the
zero-reduced-cost ("equality") edges of those potentials, so among all optimal
assignments we can then pick the lexicographically smallest one: lowest column
for row 0, then for row 1, and so on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Assignment:
    matches: list[tuple[int, int, float]] = field(default_factory=list)
    unmatched_tracks: list[int] = field(default_factory=list)
    unmatched_detections: list[int] = field(default_factory=list)

    @property
    def total_cost(self) -> float:
        return float(sum(c for _, _, c in self.matches))


def _hungarian(cost: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Solve a square problem. Returns (col_of_row, u, v) with c - u - v >= 0.

    Plain lists: tracking matrices are tiny and numpy call overhead dominates.
    """
    n = cost.shape[0]
    c = cost.tolist()
    inf = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)  # p[j]: row (1-based) matched to column j
    way = [0] * (n + 1)
    cols = range(1, n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            row = c[i0 - 1]
            ui = u[i0]
            delta, j1 = inf, 0
            for j in cols:
                if not used[j]:
                    cur = row[j - 1] - ui - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta, j1 = minv[j], j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col_of_row = np.empty(n, dtype=np.int64)
    for j in cols:
        col_of_row[p[j] - 1] = j - 1
    return col_of_row, np.array(u[1:]), np.array(v[1:])


def _lexicographic_min(tight: np.ndarray, col_of_row: np.ndarray) -> np.ndarray:
    """Lexicographically smallest perfect matching inside the ``tight`` edge set."""
    n = tight.shape[0]
    col_of_row = col_of_row.tolist()
    row_of_col = [0] * n
    for r, c in enumerate(col_of_row):
        row_of_col[c] = r
    adj = [[j for j, t in enumerate(row) if t] for row in tight.tolist()]

    for i in range(n):
        target = col_of_row[i]
        for j in adj[i]:
            if j >= target:
                break
            # row i takes column j; its old owner must reach column `target`
            # along tight edges through rows not yet fixed (> i)
            start = row_of_col[j]
            if start < i:
                continue
            parent = {}
            stack = [start]
            seen_rows = {start, i}
            found = False
            while stack and not found:
                r = stack.pop()
                for c in adj[r]:
                    if c == j or c in parent:
                        continue
                    parent[c] = r
                    if c == target:
                        found = True
                        break
                    nr = row_of_col[c]
                    if nr > i and nr not in seen_rows:
                        seen_rows.add(nr)
                        stack.append(nr)
            if not found:
                continue
            c = target
            while True:
                r = parent[c]
                prev = col_of_row[r]
                col_of_row[r] = c
                row_of_col[c] = r
                if r == start:
                    break
                c = prev
            col_of_row[i] = j
            row_of_col[j] = i
            break
    return np.array(col_of_row, dtype=np.int64)


def linear_assignment(cost) -> tuple[np.ndarray, np.ndarray]:
    """Optimal full assignment of a rectangular matrix.

    Returns ``(rows, cols)`` index arrays of length ``min(n, m)``, sorted by
    row. Ties are broken toward the lowest row, then lowest column.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValueError("cost must be a 2-D matrix")
    n, m = cost.shape
    if n == 0 or m == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix contains non-finite entries")
    if n == 1 or m == 1:
        # a single row or column: the first minimum is the canonical optimum
        k = int(np.argmin(cost.ravel()))
        return (np.array([0]), np.array([k])) if n == 1 else (np.array([k]), np.array([0]))
    size = max(n, m)
    if n != m:
        pad = float(cost.max()) + 1.0
        square = np.full((size, size), pad)
        square[:n, :m] = cost
    else:
        square = cost
    col_of_row, u, v = _hungarian(square)

    reduced = square - u[:, None] - v[None, :]
    scale = max(1.0, float(np.abs(square).max()))
    tight = reduced <= 1e-12 * scale
    if tight.sum() > size:
        col_of_row = _lexicographic_min(tight, col_of_row)

    rows = np.arange(size)
    keep = (rows < n) & (col_of_row < m)
    return rows[keep], col_of_row[keep]


def solve(costs, match_cost_max: float = 0.999) -> Assignment:
    """Hungarian matching, then strip pairs whose cost is >= ``match_cost_max``."""
    costs = np.asarray(costs, dtype=float)
    if costs.ndim != 2 and costs.size == 0:
        costs = costs.reshape(0, 0)
    n, m = costs.shape
    rows, cols = linear_assignment(costs)
    matches = []
    used_r, used_c = set(), set()
    for r, c in zip(rows.tolist(), cols.tolist()):
        cst = float(costs[r, c])
        if cst >= match_cost_max:
            continue
        matches.append((r, c, cst))
        used_r.add(r)
        used_c.add(c)
    return Assignment(
        matches=matches,
        unmatched_tracks=[r for r in range(n) if r not in used_r],
        unmatched_detections=[c for c in range(m) if c not in used_c],
    )
