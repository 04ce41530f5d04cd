"""Dense minimum-cost linear assignment.

Shortest augmenting path with row/column dual potentials (the O(n^3)
Hungarian/Jonker-Volgenant family).  Rows are inserted in increasing order and
ties are resolved toward the lowest column index, so the result is a
deterministic function of the cost matrix.
"""
from __future__ import annotations

import numpy as np
from numba import njit


class InvalidCostError(ValueError):
    pass


def _validate(costs) -> np.ndarray:
    C = np.asarray(costs, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise InvalidCostError(f"cost matrix must be square, got shape {C.shape}")
    if C.shape[0] == 0:
        raise InvalidCostError("cost matrix is empty")
    if not np.all(np.isfinite(C)):
        raise InvalidCostError("cost matrix contains NaN or infinite entries")
    return C


def _unique_row_minima(C: np.ndarray) -> np.ndarray | None:
    # If every row has a strict minimum and those minima sit in distinct
    # columns, that assignment is the unique optimum.
    n = C.shape[0]
    if n == 1:
        return np.zeros(1, dtype=np.intp)
    part = np.partition(C, 1, axis=1)
    if np.any(part[:, 0] == part[:, 1]):
        return None
    cols = np.argmin(C, axis=1)
    if np.unique(cols).size != n:
        return None
    return cols


def assign(costs) -> np.ndarray:
    """Return ``cols`` with ``cols[i]`` the column assigned to row ``i``."""
    C = _validate(costs)
    quick = _unique_row_minima(C)
    if quick is not None:
        return quick
    return _augmenting_path(np.ascontiguousarray(C))


@njit(cache=True)
def _augmenting_path(C):
    n = C.shape[0]
    # index 0 is a virtual column/row used as the root of each search
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)  # p[j]: row matched to column j
    way = np.zeros(n + 1, dtype=np.int64)
    minv = np.empty(n + 1)
    used = np.empty(n + 1, dtype=np.bool_)

    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv[:] = np.inf
        used[:] = False
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = np.inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = C[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    # strict comparison keeps the lowest column on ties
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    cols = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        cols[p[j] - 1] = j - 1
    return cols


def solve_lap(costs) -> np.ndarray:
    """Minimum-cost assignment as an n x n 0/1 permutation matrix."""
    cols = assign(costs)
    n = cols.size
    P = np.zeros((n, n))
    P[np.arange(n), cols] = 1.0
    return P


def assignment_cost(costs, cols) -> float:
    C = np.asarray(costs, dtype=float)
    return float(C[np.arange(C.shape[0]), np.asarray(cols)].sum())
