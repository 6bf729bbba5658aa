"""Modified band depth with two-curve bands, restricted to an index set."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from depthfc import kernels


@dataclass(frozen=True)
class DepthReport:
    """Depths of a curve set, kept as exact integer pair counts.

    ``counts[i]`` is the number of (pair, grid point) combinations in which
    curve ``i`` lies inside the pair's band; ``depths = counts / denominator``.
    """

    counts: np.ndarray
    n_points: int

    @property
    def set_size(self) -> int:
        return self.counts.size

    @property
    def denominator(self) -> int:
        n = self.set_size
        return n * (n - 1) // 2 * self.n_points

    @property
    def depths(self) -> np.ndarray:
        return self.counts / self.denominator


def _prepare(curve_set, index_set):
    values = np.atleast_2d(np.asarray(curve_set, dtype=np.float64))
    if values.shape[0] < 2:
        raise ValueError("band depth needs at least 2 curves")
    if index_set is not None:
        values = values[:, np.asarray(index_set, dtype=np.intp)]
    if values.shape[1] == 0:
        raise ValueError("index_set must be nonempty")
    return values


def mbd_restricted(curve_set, index_set=None) -> DepthReport:
    """Rank-based modified band depth, ``O(P * n log n)`` for ``P`` grid points."""
    values = _prepare(curve_set, index_set)
    return DepthReport(kernels.mbd_counts(values), values.shape[1])


def mbd_bruteforce(curve_set, index_set=None) -> DepthReport:
    """Modified band depth by enumerating every pair of distinct curves.

    Reference implementation for checking :func:`mbd_restricted`.
    """
    values = _prepare(curve_set, index_set)
    counts = np.zeros(values.shape[0], dtype=np.int64)
    for a, b in combinations(range(values.shape[0]), 2):
        lo = np.minimum(values[a], values[b])
        hi = np.maximum(values[a], values[b])
        counts += np.count_nonzero((lo <= values) & (values <= hi), axis=1)
    return DepthReport(counts, values.shape[1])


def depth_percentile(report: DepthReport, target: int) -> float:
    """Share of the set whose depth is at most that of ``target`` (ties count)."""
    return count_at_most(report, target) / report.set_size


def count_at_most(report: DepthReport, target: int) -> int:
    return int(np.count_nonzero(report.counts <= report.counts[target]))
