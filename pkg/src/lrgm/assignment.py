"""Exact minimum-cost linear assignment.

Shortest augmenting paths with row/column potentials (the Jonker-Volgenant
family), ``O(n^3)`` worst case.  Each Dijkstra step is vectorised over
columns, so Python overhead is ``O(n)`` per augmented row in practice.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import cdist

from .laplace import as_points


class Matching(NamedTuple):
    """Pairs ``(rows[k], cols[k])`` of matched X and Y indices."""

    rows: np.ndarray
    cols: np.ndarray

    def total_cost(self, C) -> float:
        return float(np.asarray(C)[self.rows, self.cols].sum())

    def as_permutation(self) -> np.ndarray:
        """``perm[i]`` is the Y index matched to X row ``i`` (bijections only)."""
        n = self.rows.size
        if not (np.array_equal(np.sort(self.rows), np.arange(n))
                and np.array_equal(np.sort(self.cols), np.arange(n))):
            raise ValueError("matching is not a bijection")
        perm = np.empty(n, dtype=np.intp)
        perm[self.rows] = self.cols
        return perm


def hungarian(C) -> np.ndarray:
    """Optimal assignment for a square cost matrix.

    Returns ``perm`` with row ``i`` assigned to column ``perm[i]``, minimising
    ``sum_i C[i, perm[i]]``.  Among equally cheap extensions the lowest column
    index is taken.
    """
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError("cost matrix must be square")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix has non-finite entries")
    n = C.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.intp)

    # Column n is a virtual source; row_of[j] is the row matched to column j.
    u = np.zeros(n)
    v = np.zeros(n + 1)
    row_of = np.full(n + 1, -1, dtype=np.intp)

    # column reduction: each column's cheapest row takes it if still free
    v[:n] = C.min(axis=0)
    col_of = np.full(n, -1, dtype=np.intp)
    for j, i in enumerate(np.argmin(C, axis=0)):
        if col_of[i] == -1:
            col_of[i] = j
            row_of[j] = i

    for i in np.flatnonzero(col_of == -1):
        row_of[n] = i
        j0 = n
        minv = np.full(n, np.inf)
        way = np.full(n, n, dtype=np.intp)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = row_of[j0]
            free = ~used[:n]
            reduced = C[i0] - u[i0] - v[:n]
            better = free & (reduced < minv)
            minv[better] = reduced[better]
            way[better] = j0
            cand = np.where(free, minv, np.inf)
            j1 = int(np.argmin(cand))
            delta = cand[j1]
            tree = np.flatnonzero(used)
            u[row_of[tree]] += delta
            v[tree] -= delta
            minv[free] -= delta
            j0 = j1
            if row_of[j0] == -1:
                break
        while j0 != n:
            j1 = way[j0]
            row_of[j0] = row_of[j1]
            j0 = j1
    perm = np.empty(n, dtype=np.intp)
    perm[row_of[:n]] = np.arange(n)
    return perm


def cost_matrix(XO, Y) -> np.ndarray:
    """Squared Euclidean distances between rows of ``XO`` and rows of ``Y``."""
    return cdist(as_points(XO), as_points(Y), metric="sqeuclidean")


def assign_points(XO, Y, rng: np.random.Generator | None = None) -> Matching:
    """Match rows of ``XO`` to rows of ``Y`` by minimum squared distance.

    Equal sizes give a bijection.  Otherwise the smaller cloud is resampled
    with replacement up to the larger size, so every point of the larger
    cloud is matched and indices of the smaller one may repeat.
    """
    XO, Y = as_points(XO), as_points(Y)
    nx, ny = XO.shape[0], Y.shape[0]
    if nx == 0 or ny == 0:
        raise ValueError("empty point cloud")
    if XO.shape[1] != Y.shape[1]:
        raise ValueError("dimension mismatch")
    if nx == ny:
        return Matching(np.arange(nx), hungarian(cost_matrix(XO, Y)))
    if rng is None:
        rng = np.random.default_rng()
    if nx < ny:
        boot = rng.integers(0, nx, size=ny)
        perm = hungarian(cost_matrix(XO[boot], Y))
        order = np.argsort(perm)
        return Matching(boot[order], perm[order])
    boot = rng.integers(0, ny, size=nx)
    perm = hungarian(cost_matrix(XO, Y[boot]))
    return Matching(np.arange(nx), boot[perm])
