"""Prediction bands from the deepest envelope members, tuning of k, point forecasts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from depthfc.core import CurveLibrary, FocalCurve, PeriodGrid, lambda_measure, pointwise_hull
from depthfc.envelope import Envelope, FocalOutsideRangeError, build_envelope

WEIGHTINGS = ("as-written", "inverse-distance")


class EnvelopeTooSmallError(ValueError):
    """The envelope has fewer members than the requested band size."""


def k_deepest(envelope: Envelope, k: int) -> np.ndarray:
    """Library indices of the ``k`` deepest envelope members."""
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if k > len(envelope):
        raise EnvelopeTooSmallError(
            f"the focal-curve envelope has not enough sample curves: k={k} > {len(envelope)}"
        )
    return envelope.ranked()[:k]


def band(library: CurveLibrary, members, index_set=None):
    return pointwise_hull(library.curves[np.asarray(members)], index_set)


def coverage(lower, upper, truth) -> float:
    truth = np.asarray(truth, dtype=np.float64)
    return lambda_measure((lower <= truth) & (truth <= upper))


def mean_width(library: CurveLibrary, members, index_set=None) -> float:
    """Band width summed over ``index_set`` relative to the whole library's range."""
    if index_set is None:
        index_set = library.grid.forecast
    lo, hi = band(library, members, index_set)
    full_lo, full_hi = pointwise_hull(library.curves, index_set)
    denom = float(np.sum(full_hi - full_lo))
    if denom <= 0:
        raise ValueError("library has zero width on the forecast segment")
    return float(np.sum(hi - lo)) / denom


def forecast_weights(library: CurveLibrary, envelope: Envelope, focal: FocalCurve,
                     weighting: str = "as-written") -> np.ndarray:
    """Weights of the envelope members (in ``envelope.member_indices`` order)."""
    if weighting not in WEIGHTINGS:
        raise ValueError(f"unknown weighting {weighting!r}; choose from {WEIGHTINGS}")
    c = library.grid.cut_index
    diff = library.curves[envelope.member_indices, :c] - focal.observed[:c]
    d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if d.size == 1:
        return np.ones(1)
    if weighting == "as-written":
        total = d.sum()
        if total == 0:
            return np.full(d.size, 1.0 / d.size)
        return d / total
    zero = d == 0
    if zero.any():
        # limit of inverse-distance weights as a distance goes to zero
        return zero / np.count_nonzero(zero)
    inv = 1.0 / d
    return inv / inv.sum()


def point_forecast(library: CurveLibrary, envelope: Envelope, focal: FocalCurve,
                   weighting: str = "as-written") -> np.ndarray:
    """Weighted mean of the envelope members over the whole period grid."""
    w = forecast_weights(library, envelope, focal, weighting)
    return w @ library.curves[envelope.member_indices]


@dataclass
class BandForecast:
    """Band on the whole grid (observed part is the central region, the rest its extension)."""

    k: int
    members: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    point: np.ndarray
    mean_width: float
    coverage: Optional[float] = None
    grid: Optional[PeriodGrid] = field(default=None, repr=False)

    def forecast_rows(self):
        g = self.grid
        for j in g.forecast:
            yield float(g.times[j]), float(self.lower[j]), float(self.upper[j]), float(self.point[j])


def band_forecast(library: CurveLibrary, focal: FocalCurve, k: int,
                  envelope: Optional[Envelope] = None,
                  weighting: str = "as-written") -> BandForecast:
    if envelope is None:
        envelope = build_envelope(library, focal)
    members = k_deepest(envelope, k)
    lower, upper = band(library, members)
    point = point_forecast(library, envelope, focal, weighting)
    F = library.grid.forecast
    cov = None
    if focal.truth is not None:
        cov = coverage(lower[F], upper[F], focal.truth)
    return BandForecast(k, members, lower, upper, point, mean_width(library, members, F),
                        cov, library.grid)


def _nested_hulls(library: CurveLibrary, envelope: Envelope, k_max: int, index_set):
    """Running hull of the ranked members on ``index_set`` for k = 2..k_max.

    Beyond the envelope size the band stays at the full envelope hull.
    """
    ranked = envelope.ranked()
    vals = library.curves[ranked][:, index_set]
    lo = np.minimum.accumulate(vals, axis=0)
    hi = np.maximum.accumulate(vals, axis=0)
    rows = np.minimum(np.arange(2, k_max + 1), len(ranked)) - 1
    return lo[rows], hi[rows]


def coverage_profile(library: CurveLibrary, envelope: Envelope, truth, k_max: int) -> np.ndarray:
    """Coverage of the forecast segment for every k in 2..k_max."""
    lo, hi = _nested_hulls(library, envelope, k_max, library.grid.forecast)
    truth = np.asarray(truth, dtype=np.float64)
    return np.mean((lo <= truth) & (truth <= hi), axis=1)


def width_profile(library: CurveLibrary, envelope: Envelope, k_max: int) -> np.ndarray:
    F = library.grid.forecast
    lo, hi = _nested_hulls(library, envelope, k_max, F)
    full_lo, full_hi = pointwise_hull(library.curves, F)
    denom = float(np.sum(full_hi - full_lo))
    if denom <= 0:
        raise ValueError("library has zero width on the forecast segment")
    return np.sum(hi - lo, axis=1) / denom


def alpha_percentile(values, alpha: float) -> float:
    """Lower empirical quantile: the order statistic of rank ceil(alpha * m)."""
    values = np.sort(np.asarray(values, dtype=np.float64))
    rank = max(1, math.ceil(alpha * values.size - 1e-9))
    return float(values[rank - 1])


@dataclass
class TuningChart:
    k: np.ndarray
    mean_coverage: np.ndarray
    alpha_percentile: np.ndarray
    mean_width: np.ndarray
    alpha: float
    m: int
    coverages: np.ndarray = field(repr=False, default=None)

    def rows(self):
        for i in range(self.k.size):
            yield (int(self.k[i]), float(self.mean_coverage[i]),
                   float(self.alpha_percentile[i]), float(self.mean_width[i]))


def chart_from_coverages(coverages, widths, alpha: float, k_values=None) -> TuningChart:
    """Assemble a chart from an ``(m, K)`` matrix of replayed coverages.

    Column ``i`` corresponds to ``k = i + 2``. ``k_values`` selects rows.
    """
    coverages = np.asarray(coverages, dtype=np.float64)
    m, K = coverages.shape
    all_k = np.arange(2, K + 2)
    if k_values is None:
        k_values = all_k
    k_values = np.asarray(k_values, dtype=np.int64)
    cols = k_values - 2
    sub = coverages[:, cols]
    mean = sub.mean(axis=0)
    low = np.array([alpha_percentile(sub[:, i], alpha) for i in range(cols.size)])
    widths = np.full(K, np.nan) if widths is None else np.asarray(widths, dtype=np.float64)
    return TuningChart(k_values, mean, low, widths[cols], alpha, m, sub)


def replay_coverages(library: CurveLibrary, m: int, k_max: int) -> np.ndarray:
    """Coverages of the m most recent periods, each forecast from its own past.

    A period whose observed segment falls outside its past range gets zero
    coverage for every k.
    """
    n = len(library)
    if m >= n or n - m < 2:
        raise ValueError(f"window m={m} needs at least m + 2 curves, library has {n}")
    out = np.zeros((m, k_max - 1))
    for row, i in enumerate(range(n - m, n)):
        past = library.head(i)
        target = library.focal_from(i)
        try:
            env = build_envelope(past, target)
        except FocalOutsideRangeError:
            continue
        out[row] = coverage_profile(past, env, target.truth, k_max)
    return out


def tune(library: CurveLibrary, m: int, alpha: float, k_max: int = 30,
         envelope: Optional[Envelope] = None) -> TuningChart:
    """Coverage/width chart for choosing k.

    With the current focal ``envelope`` the rows span k = 2..min(|envelope|, k_max)
    and carry that envelope's mean widths; otherwise widths are NaN.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    cov = replay_coverages(library, m, k_max)
    if envelope is None:
        return chart_from_coverages(cov, None, alpha)
    top = min(len(envelope), k_max)
    if top < 2:
        raise EnvelopeTooSmallError("the focal-curve envelope has fewer than 2 curves")
    widths = width_profile(library, envelope, k_max)
    return chart_from_coverages(cov, widths, alpha, np.arange(2, top + 1))


def select_k(chart: TuningChart, theta_mean: float, theta_min: float) -> Optional[int]:
    """Smallest k meeting both thresholds, or None when no row qualifies."""
    ok = (chart.mean_coverage >= theta_mean) & (chart.alpha_percentile >= theta_min)
    hits = np.flatnonzero(ok)
    return int(chart.k[hits[0]]) if hits.size else None


PRACTITIONERS = {
    "P1": (0.9, 0.6),
    "P2": (0.9, 0.3),
    "P3": (0.6, 0.3),
}
