"""Grids, curves, slicing of a series into periods, and pointwise helpers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class MalformedInputError(ValueError):
    """Input data cannot be arranged into period curves."""


@dataclass(frozen=True)
class PeriodGrid:
    """Midpoint discretization of one period ``[0, p]``.

    Grid point ``j`` sits at ``(j + 0.5) * p / T``. Indices below
    ``cut_index`` form the observed segment, the rest the forecast segment.
    """

    points_per_period: int
    cut_index: int
    period_length: float = 1.0

    def __post_init__(self):
        T = self.points_per_period
        if int(T) != T or T < 2:
            raise ValueError(f"points_per_period must be an integer >= 2, got {T!r}")
        if not 1 <= self.cut_index <= T - 1:
            raise ValueError(f"cut_index must lie in [1, {T - 1}], got {self.cut_index!r}")
        if not self.period_length > 0:
            raise ValueError("period_length must be positive")

    @property
    def spacing(self) -> float:
        return self.period_length / self.points_per_period

    @property
    def times(self) -> np.ndarray:
        return (np.arange(self.points_per_period) + 0.5) * self.spacing

    @property
    def q(self) -> float:
        return self.cut_index * self.spacing

    @property
    def observed(self) -> np.ndarray:
        return np.arange(self.cut_index)

    @property
    def forecast(self) -> np.ndarray:
        return np.arange(self.cut_index, self.points_per_period)

    @property
    def n_observed(self) -> int:
        return self.cut_index

    @property
    def n_forecast(self) -> int:
        return self.points_per_period - self.cut_index


@dataclass(frozen=True)
class FocalCurve:
    """The partially observed period; ``truth`` holds the withheld segment when known."""

    observed: np.ndarray
    truth: Optional[np.ndarray] = None

    def __post_init__(self):
        obs = np.asarray(self.observed, dtype=np.float64)
        if obs.ndim != 1 or not np.all(np.isfinite(obs)):
            raise ValueError("focal observed values must be a finite 1-D vector")
        object.__setattr__(self, "observed", obs)
        if self.truth is not None:
            object.__setattr__(self, "truth", np.asarray(self.truth, dtype=np.float64))

    def full(self) -> np.ndarray:
        if self.truth is None:
            raise ValueError("focal truth is not available")
        return np.concatenate([self.observed, self.truth])


@dataclass(frozen=True)
class CurveLibrary:
    """Chronologically ordered, fully observed period curves as an ``(n, T)`` array."""

    grid: PeriodGrid
    curves: np.ndarray = field(repr=False)

    def __post_init__(self):
        curves = np.asarray(self.curves, dtype=np.float64)
        if curves.ndim != 2 or curves.shape[1] != self.grid.points_per_period:
            raise ValueError(
                f"curves must have shape (n, {self.grid.points_per_period}), got {curves.shape}"
            )
        if curves.shape[0] < 2:
            raise ValueError("a curve library needs at least 2 curves")
        if not np.all(np.isfinite(curves)):
            raise ValueError("curve values must be finite")
        curves.setflags(write=False)
        object.__setattr__(self, "curves", curves)

    def __len__(self):
        return self.curves.shape[0]

    def head(self, n: int) -> "CurveLibrary":
        """The first ``n`` curves."""
        return CurveLibrary(self.grid, self.curves[:n])

    def focal_from(self, i: int) -> FocalCurve:
        """Curve ``i`` recast as a focal curve with its forecast segment as truth."""
        c = self.grid.cut_index
        return FocalCurve(self.curves[i, :c], self.curves[i, c:])


def slice_series(samples, grid: PeriodGrid):
    """Cut a flat series into period curves.

    A trailing partial period of exactly ``cut_index`` samples becomes the
    focal curve. Returns ``(library, focal_or_None)``.
    """
    samples = np.asarray(samples, dtype=np.float64).ravel()
    T = grid.points_per_period
    n_full, rem = divmod(samples.size, T)
    if rem not in (0, grid.cut_index):
        raise MalformedInputError(
            f"series length {samples.size} leaves a remainder of {rem} samples; "
            f"expected 0 or cut_index={grid.cut_index} (period of {T} points)"
        )
    library = CurveLibrary(grid, samples[: n_full * T].reshape(n_full, T))
    focal = FocalCurve(samples[n_full * T:]) if rem else None
    return library, focal


def restricted_distance(a, b, index_set) -> float:
    """Euclidean distance between two curves over ``index_set``.

    The grid-spacing factor is omitted, which only rescales distances.
    """
    idx = np.asarray(index_set, dtype=np.intp)
    if idx.size == 0:
        raise ValueError("index_set must be nonempty")
    d = np.asarray(a, dtype=np.float64)[idx] - np.asarray(b, dtype=np.float64)[idx]
    return float(np.sqrt(np.dot(d, d)))


def lambda_measure(predicate) -> float:
    """Fraction of grid points where ``predicate`` holds."""
    predicate = np.asarray(predicate, dtype=bool)
    if predicate.size == 0:
        raise ValueError("index_set must be nonempty")
    return np.count_nonzero(predicate) / predicate.size


def pointwise_hull(curves, index_set=None):
    """Pointwise ``(lower, upper)`` envelope of a set of curves."""
    curves = np.atleast_2d(np.asarray(curves, dtype=np.float64))
    if curves.shape[0] == 0:
        raise ValueError("cannot take the hull of an empty set")
    if index_set is not None:
        curves = curves[:, np.asarray(index_set, dtype=np.intp)]
    return curves.min(axis=0), curves.max(axis=0)
