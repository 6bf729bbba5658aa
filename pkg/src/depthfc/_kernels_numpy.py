"""Pure-numpy versions of the hot loops.

Every function here has a twin in ``_kernels_numba`` with the same signature
and bit-identical integer results.
"""

import numpy as np


def mbd_counts(values):
    """Integer band-membership counts for modified band depth.

    ``values`` is ``(n_curves, n_points)``. For curve ``y`` and point ``j`` the
    number of unordered distinct pairs whose pointwise band contains ``y_j``
    (with ties counted as inside) is ``C(n, 2) - C(above, 2) - C(below, 2)``.
    Returns the sum of that count over points, one int64 per curve.
    """
    values = np.asarray(values, dtype=np.float64)
    n, n_points = values.shape
    total = n * (n - 1) // 2
    counts = np.zeros(n, dtype=np.int64)
    ordered = np.sort(values, axis=0)
    for j in range(n_points):
        col = ordered[:, j]
        below = np.searchsorted(col, values[:, j], side="left")
        above = n - np.searchsorted(col, values[:, j], side="right")
        counts += total - below * (below - 1) // 2 - above * (above - 1) // 2
    return counts


def greedy_cover(candidates, focal):
    """Single greedy pass selecting candidates that strictly add coverage.

    ``candidates`` is ``(n_candidates, n_points)`` sorted nearest first and
    ``focal`` has ``n_points`` entries. Returns a boolean selection mask and
    the number of covered points of the final selection.
    """
    candidates = np.asarray(candidates, dtype=np.float64)
    n_cand, n_points = candidates.shape
    selected = np.zeros(n_cand, dtype=np.bool_)
    if n_cand == 0:
        return selected, 0
    lo = candidates[0].copy()
    hi = candidates[0].copy()
    selected[0] = True
    best = int(np.count_nonzero((lo <= focal) & (focal <= hi)))
    for k in range(1, n_cand):
        if best == n_points:
            break
        new_lo = np.minimum(lo, candidates[k])
        new_hi = np.maximum(hi, candidates[k])
        covered = int(np.count_nonzero((new_lo <= focal) & (focal <= new_hi)))
        if covered > best:
            selected[k] = True
            lo, hi, best = new_lo, new_hi, covered
    return selected, best
