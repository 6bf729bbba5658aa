"""Monte Carlo checks of the coverage estimators and rolling forecasting exercises."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from depthfc.core import CurveLibrary, FocalCurve, PeriodGrid
from depthfc.envelope import FocalOutsideRangeError, build_envelope
from depthfc.forecast import (
    PRACTITIONERS,
    alpha_percentile,
    chart_from_coverages,
    coverage_profile,
    point_forecast,
    select_k,
    width_profile,
)
from depthfc.simulate import MODELS, PCProcessSpec, make_pc_trajectory


@dataclass(frozen=True)
class Sizes:
    """Experiment dimensions; ``n`` sample curves plus one focal period."""

    n: int = 200
    m: int = 50
    points_per_period: int = 50
    cut_index: Optional[int] = None
    k_max: int = 30

    @property
    def grid(self) -> PeriodGrid:
        cut = self.cut_index if self.cut_index is not None else self.points_per_period // 2
        return PeriodGrid(self.points_per_period, cut)


FULL_SIZES = Sizes(n=1000, m=100, points_per_period=100)


class UndefinedMAPEError(ValueError):
    pass


def error_metrics(point, truth):
    """``(MSE, MAPE in percent)`` of a forecast over the forecast segment."""
    point = np.asarray(point, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    err = point - truth
    mse = float(np.mean(err ** 2))
    if np.any(truth == 0):
        raise UndefinedMAPEError(f"MAPE undefined: truth has zeros (MSE={mse!r})")
    return mse, float(100 * np.mean(np.abs(err) / np.abs(truth)))


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054):
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("n must be positive")
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    # rounding can push a bound past p at the extremes
    return max(0.0, min(p, centre - half)), min(1.0, max(p, centre + half))


def standardized_mean_error(d):
    """``sqrt(N) * mean(d) / std(d)``; returns ``(value, degenerate)``."""
    d = np.asarray(d, dtype=np.float64)
    sd = d.std(ddof=1) if d.size > 1 else 0.0
    if sd == 0:
        return float("nan"), True
    return float(math.sqrt(d.size) * d.mean() / sd), False


@dataclass
class PeriodOutcome:
    """Everything measured when period ``i`` is forecast from periods before it."""

    index: int
    coverage: np.ndarray  # k = 2..k_max
    width: np.ndarray
    n_members: int
    mse: Dict[str, float]
    baseline_mse: float
    mape: Dict[str, float]


def period_outcome(curves: np.ndarray, grid: PeriodGrid, i: int, k_max: int) -> PeriodOutcome:
    past = CurveLibrary(grid, curves[:i])
    c = grid.cut_index
    target = FocalCurve(curves[i, :c], curves[i, c:])
    K = k_max - 1
    try:
        env = build_envelope(past, target)
    except FocalOutsideRangeError:
        nan = float("nan")
        return PeriodOutcome(i, np.zeros(K), np.full(K, nan), 0,
                             {"as-written": nan, "inverse-distance": nan}, nan,
                             {"as-written": nan, "inverse-distance": nan})
    truth = target.truth
    cov = coverage_profile(past, env, truth, k_max)
    wid = width_profile(past, env, k_max)
    mse, mape = {}, {}
    for mode in ("as-written", "inverse-distance"):
        pt = point_forecast(past, env, target, mode)[c:]
        mse[mode] = float(np.mean((pt - truth) ** 2))
        try:
            mape[mode] = error_metrics(pt, truth)[1]
        except UndefinedMAPEError:
            mape[mode] = float("nan")
    base = float(np.mean((past.curves[:, c:].mean(axis=0) - truth) ** 2))
    return PeriodOutcome(i, cov, wid, len(env), mse, base, mape)


def _outcomes(curves, grid, indices, k_max):
    return [period_outcome(curves, grid, i, k_max) for i in indices]


@dataclass
class TrialResult:
    seed_key: int
    mean_coverage: np.ndarray
    alpha_percentile: Dict[float, np.ndarray]
    coverage: np.ndarray
    width: np.ndarray
    n_members: int
    selected_k: Optional[int]
    mse: Dict[str, float]
    baseline_mse: float
    mape: Dict[str, float]


def trial_seed(master: int, trial: int, stream: int = 0) -> int:
    """Per-trial seed from the master seed, a stream id and the trial index."""
    seq = np.random.SeedSequence(master, spawn_key=(stream, trial))
    return int(seq.generate_state(1, np.uint64)[0])


def run_trial(model: str, sizes: Sizes, master_seed: int, trial: int,
              alphas: Sequence[float] = (0.05, 0.1),
              rule=PRACTITIONERS["P1"]) -> TrialResult:
    seed = trial_seed(master_seed, trial, MODELS.index(model))
    grid = sizes.grid
    spec = PCProcessSpec(model, grid, sizes.n + 1, seed=seed)
    library, focal = make_pc_trajectory(spec)
    curves = np.vstack([library.curves, focal.full()])
    n, m = sizes.n, sizes.m
    outs = _outcomes(curves, grid, range(n - m, n + 1), sizes.k_max)
    replay = np.vstack([o.coverage for o in outs[:-1]])
    cur = outs[-1]
    lows = {a: np.array([alpha_percentile(replay[:, j], a) for j in range(replay.shape[1])])
            for a in alphas}
    chart = chart_from_coverages(replay, cur.width, alphas[0],
                                 np.arange(2, max(2, min(cur.n_members, sizes.k_max)) + 1))
    k_star = select_k(chart, *rule)
    return TrialResult(trial, replay.mean(axis=0), lows, cur.coverage, cur.width,
                       cur.n_members, k_star, cur.mse, cur.baseline_mse, cur.mape)


def _run_trial_args(args):
    return run_trial(*args)


@dataclass
class MCResult:
    model: str
    sizes: Sizes
    seed: int
    per_trial: List[TrialResult] = field(repr=False)

    @property
    def k_values(self) -> np.ndarray:
        return np.arange(2, self.sizes.k_max + 1)

    def differences(self) -> np.ndarray:
        """``M_k - C_k`` per trial (rows) and k (columns)."""
        return np.vstack([t.mean_coverage - t.coverage for t in self.per_trial])

    def standardized_errors(self) -> Dict[int, tuple]:
        d = self.differences()
        return {int(k): standardized_mean_error(d[:, j]) for j, k in enumerate(self.k_values)}

    def probabilities(self, alpha: float) -> Dict[int, tuple]:
        """Per k: (empirical P(C_k >= C_k^alpha), Wilson low, Wilson high)."""
        hits = np.vstack([t.coverage >= t.alpha_percentile[alpha] for t in self.per_trial])
        N = hits.shape[0]
        out = {}
        for j, k in enumerate(self.k_values):
            s = int(hits[:, j].sum())
            out[int(k)] = (s / N, *wilson_interval(s, N))
        return out

    def charts(self, alpha: float):
        for t in self.per_trial:
            top = max(2, min(t.n_members, self.sizes.k_max))
            ks = np.arange(2, top + 1)
            yield ks, t.mean_coverage[ks - 2], t.alpha_percentile[alpha][ks - 2], t.width[ks - 2]


def monte_carlo(model: str, N: int, sizes: Sizes = Sizes(), seed: int = 0,
                alphas: Sequence[float] = (0.05, 0.1), workers: int = 1) -> MCResult:
    if N < 10:
        raise ValueError("need at least 10 trials")
    args = [(model, sizes, seed, j, tuple(alphas)) for j in range(N)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            trials = list(pool.map(_run_trial_args, args))
    else:
        trials = [run_trial(*a) for a in args]
    return MCResult(model, sizes, seed, trials)


def bias_test(model: str, N: int, sizes: Sizes = Sizes(), k_values=(2, 5, 10, 20),
              seed: int = 0, workers: int = 1, result: Optional[MCResult] = None):
    """Standardized mean error of the mean-coverage estimator, per k.

    Values are ``(error, degenerate)``; degenerate means all differences were
    identical.
    """
    if result is None:
        result = monte_carlo(model, N, sizes, seed, workers=workers)
    errs = result.standardized_errors()
    return {int(k): errs[int(k)] for k in k_values}


def confidence_test(model: str, N: int, sizes: Sizes = Sizes(), k_values=(2, 5, 10, 20),
                    alpha: float = 0.1, seed: int = 0, workers: int = 1,
                    result: Optional[MCResult] = None):
    """Empirical probability that realized coverage clears the lower estimate, per k."""
    if result is None:
        result = monte_carlo(model, N, sizes, seed, alphas=(alpha,), workers=workers)
    probs = result.probabilities(alpha)
    return {int(k): probs[int(k)] for k in k_values}


@dataclass
class ExerciseRow:
    period: int
    k: Optional[int]
    coverage: float
    width: float
    mse: float


@dataclass
class ExerciseSummary:
    rule: tuple
    alpha: float
    rows: List[ExerciseRow]

    @property
    def feasible(self) -> List[ExerciseRow]:
        return [r for r in self.rows if r.k is not None]

    @property
    def infeasible_fraction(self) -> float:
        return 1 - len(self.feasible) / len(self.rows)

    def _avg(self, attr):
        rows = self.feasible
        return float(np.mean([getattr(r, attr) for r in rows])) if rows else float("nan")

    @property
    def mean_coverage(self) -> float:
        return self._avg("coverage")

    @property
    def mean_width(self) -> float:
        return self._avg("width")

    @property
    def mean_k(self) -> float:
        return self._avg("k")

    @property
    def probability(self) -> float:
        """Share of feasible periods whose coverage reaches the rule's minimum."""
        rows = self.feasible
        if not rows:
            return float("nan")
        return float(np.mean([r.coverage >= self.rule[1] for r in rows]))

    def as_dict(self):
        return {
            "rule": list(self.rule),
            "alpha": self.alpha,
            "mean_coverage": self.mean_coverage,
            "mean_width": self.mean_width,
            "probability": self.probability,
            "mean_k": self.mean_k,
            "infeasible_fraction": self.infeasible_fraction,
            "periods": len(self.rows),
        }


def exercise_outcomes(curves, grid: PeriodGrid, horizon: int, m: int, k_max: int = 30,
                      workers: int = 1) -> List[PeriodOutcome]:
    """Per-period outcomes for the last ``horizon`` periods and their replay windows."""
    curves = np.asarray(curves, dtype=np.float64)
    total = curves.shape[0]
    first = total - horizon - m
    if horizon < 1 or first < 2:
        raise ValueError(f"horizon {horizon} + window {m} needs more than {total - 2} periods")
    idx = list(range(first, total))
    if workers > 1:
        chunks = [idx[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = pool.map(_outcomes, [curves] * workers, [grid] * workers, chunks, [k_max] * workers)
            outs = sorted((o for part in parts for o in part), key=lambda o: o.index)
    else:
        outs = _outcomes(curves, grid, idx, k_max)
    return outs


def practitioner_exercise(curves, grid: PeriodGrid, rules=None, alpha: float = 0.05,
                          horizon: int = 100, m: int = 100, k_max: int = 30,
                          outcomes: Optional[List[PeriodOutcome]] = None,
                          weighting: str = "as-written") -> Dict[str, ExerciseSummary]:
    """Forecast the last ``horizon`` periods, each tuned on its own rolling window."""
    if rules is None:
        rules = PRACTITIONERS
    if outcomes is None:
        outcomes = exercise_outcomes(curves, grid, horizon, m, k_max)
    by_index = {o.index: o for o in outcomes}
    last = max(by_index)
    targets = range(last - horizon + 1, last + 1)
    result = {name: ExerciseSummary(tuple(rule), alpha, []) for name, rule in rules.items()}
    for i in targets:
        cur = by_index[i]
        replay = np.vstack([by_index[j].coverage for j in range(i - m, i)])
        top = min(cur.n_members, k_max)
        for name, rule in rules.items():
            k = None
            if top >= 2:
                chart = chart_from_coverages(replay, cur.width, alpha, np.arange(2, top + 1))
                k = select_k(chart, *rule)
            if k is None:
                result[name].rows.append(ExerciseRow(i, None, float("nan"), float("nan"), cur.mse[weighting]))
            else:
                result[name].rows.append(
                    ExerciseRow(i, k, float(cur.coverage[k - 2]), float(cur.width[k - 2]), cur.mse[weighting])
                )
    return result


def simulate_exercise(model: str, n_periods: int, grid: PeriodGrid, seed: int = 0, **kwargs):
    """Run :func:`practitioner_exercise` on one simulated trajectory."""
    library, focal = make_pc_trajectory(PCProcessSpec(model, grid, n_periods, seed=seed))
    curves = np.vstack([library.curves, focal.full()])
    return practitioner_exercise(curves, grid, **kwargs)
