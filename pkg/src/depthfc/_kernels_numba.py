"""Numba-compiled versions of the hot loops in ``_kernels_numpy``."""

import numpy as np
from numba import njit


@njit(cache=True)
def _mbd_counts(values):
    n, n_points = values.shape
    total = n * (n - 1) // 2
    counts = np.zeros(n, dtype=np.int64)
    col = np.empty(n, dtype=np.float64)
    for j in range(n_points):
        for i in range(n):
            col[i] = values[i, j]
        ordered = np.sort(col)
        for i in range(n):
            below = np.searchsorted(ordered, col[i], side="left")
            above = n - np.searchsorted(ordered, col[i], side="right")
            counts[i] += total - below * (below - 1) // 2 - above * (above - 1) // 2
    return counts


@njit(cache=True)
def _greedy_cover(candidates, focal):
    n_cand, n_points = candidates.shape
    selected = np.zeros(n_cand, dtype=np.bool_)
    if n_cand == 0:
        return selected, 0
    lo = candidates[0].copy()
    hi = candidates[0].copy()
    selected[0] = True
    best = 0
    for j in range(n_points):
        if lo[j] <= focal[j] <= hi[j]:
            best += 1
    for k in range(1, n_cand):
        if best == n_points:
            break
        covered = 0
        for j in range(n_points):
            if min(lo[j], candidates[k, j]) <= focal[j] <= max(hi[j], candidates[k, j]):
                covered += 1
        if covered > best:
            selected[k] = True
            best = covered
            for j in range(n_points):
                lo[j] = min(lo[j], candidates[k, j])
                hi[j] = max(hi[j], candidates[k, j])
    return selected, best


def mbd_counts(values):
    return _mbd_counts(np.ascontiguousarray(values, dtype=np.float64))


def greedy_cover(candidates, focal):
    selected, best = _greedy_cover(
        np.ascontiguousarray(candidates, dtype=np.float64),
        np.ascontiguousarray(focal, dtype=np.float64),
    )
    return selected, int(best)
