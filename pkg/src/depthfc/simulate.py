"""Gaussian-process draws and periodically correlated test processes.

Three processes are built from a stationary squared-exponential process
``X`` and an independent periodic process ``f``:

* ``Y1 = f + X``
* ``Y2 = f * X``
* ``Y3(t) = X(t + f(t))``

Stationary draws on regular grids use circulant embedding. A block-wise
conditional Cholesky sampler is the fallback when the embedding is not
nonnegative definite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from depthfc.core import CurveLibrary, FocalCurve, PeriodGrid

MODELS = ("Y1", "Y2", "Y3")
JITTER = 1e-9


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    sigma: float = 1.0
    lengthscale: float = 1.0
    period: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("squared_exponential", "periodic"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not (self.sigma > 0 and self.lengthscale > 0):
            raise ValueError("sigma and lengthscale must be positive")
        if self.kind == "periodic" and not (self.period is not None and self.period > 0):
            raise ValueError("periodic kernel needs a positive period")

    def __call__(self, lag):
        lag = np.abs(np.asarray(lag, dtype=np.float64))
        s2 = self.sigma ** 2
        if self.kind == "squared_exponential":
            return s2 * np.exp(-lag ** 2 / (2 * self.lengthscale ** 2))
        return s2 * np.exp(-2 * np.sin(np.pi * lag / self.period) ** 2 / self.lengthscale ** 2)

    def matrix(self, times):
        times = np.asarray(times, dtype=np.float64)
        return self(times[:, None] - times[None, :])


def kernel_value(spec: KernelSpec, t, s) -> float:
    return float(spec(t - s))


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _check_uniform(times):
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or times.size < 1:
        raise ValueError("time grid must be a nonempty 1-D array")
    if times.size == 1:
        return times, 1.0
    steps = np.diff(times)
    h = steps.mean()
    if not h > 0 or np.max(np.abs(steps - h)) > 1e-6 * abs(h):
        raise ValueError("time grid must be uniform and ascending")
    return times, h


def circulant_eigenvalues(kernel: KernelSpec, n: int, h: float, max_doublings: int = 4,
                          tol: float = 1e-8):
    """Eigenvalues of the smallest nonnegative embedding tried, or None if all fail."""
    size = max(2 * (n - 1), 1)
    for _ in range(max_doublings + 1):
        lags = np.minimum(np.arange(size), size - np.arange(size)) * h
        eig = np.fft.fft(kernel(lags)).real
        if eig.min() >= -tol * eig.max():
            return np.clip(eig, 0.0, None)
        size *= 2
    return None


def _draw_circulant(eig, n, rng, size):
    M = eig.size
    scale = np.sqrt(eig / M)
    draws = np.empty((size, n))
    filled = 0
    while filled < size:
        z = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        y = np.fft.fft(scale * z)
        draws[filled] = y.real[:n]
        filled += 1
        if filled < size:
            draws[filled] = y.imag[:n]
            filled += 1
    return draws


def _psd_factor(cov):
    cov = cov + JITTER * np.trace(cov) / cov.shape[0] * np.eye(cov.shape[0])
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(cov)
        return v * np.sqrt(np.clip(w, 0, None))


def sample_block_cholesky(kernel: KernelSpec, times, seed=None, size: int = 1,
                          block: int = 256) -> np.ndarray:
    """Draws built block by block, each block conditioned on the one before.

    Exact when the grid fits in one block.
    """
    times, h = _check_uniform(times)
    rng = _rng(seed)
    n = times.size
    b = min(block, n)
    rel = np.arange(2 * b) * h
    K = kernel.matrix(rel)
    L0 = _psd_factor(K[:b, :b])
    out = np.empty((size, n))
    out[:, :b] = rng.standard_normal((size, b)) @ L0.T
    if n == b:
        return out

    def conditional(nb):
        Kaa = K[:b, :b] + JITTER * K[0, 0] * np.eye(b)
        Kba = K[b:b + nb, :b]
        A = np.linalg.solve(Kaa, Kba.T).T
        S = K[b:b + nb, b:b + nb] - A @ Kba.T
        return A, _psd_factor(0.5 * (S + S.T))

    A, L = conditional(b)
    start = b
    while start < n:
        nb = min(b, n - start)
        if nb != b:
            A, L = conditional(nb)
        prev = out[:, start - b:start]
        out[:, start:start + nb] = prev @ A.T + rng.standard_normal((size, nb)) @ L.T
        start += nb
    return out


def sample_gp(kernel: KernelSpec, times, seed=None, size: Optional[int] = None,
              method: str = "auto", block: int = 256) -> np.ndarray:
    """Zero-mean stationary Gaussian draws on a uniform ascending grid.

    ``method`` is ``"circulant"``, ``"cholesky"`` or ``"auto"`` (circulant
    with Cholesky fallback). Returns one vector, or ``(size, n)`` when
    ``size`` is given.
    """
    times, h = _check_uniform(times)
    rng = _rng(seed)
    n_draws = 1 if size is None else size
    draws = None
    if method in ("auto", "circulant"):
        eig = circulant_eigenvalues(kernel, times.size, h)
        if eig is not None:
            draws = _draw_circulant(eig, times.size, rng, n_draws)
        elif method == "circulant":
            raise ValueError("circulant embedding is not nonnegative definite for this grid")
    elif method != "cholesky":
        raise ValueError(f"unknown method {method!r}")
    if draws is None:
        draws = sample_block_cholesky(kernel, times, rng, n_draws, block)
    return draws[0] if size is None else draws


def sample_periodic_pattern(kernel: KernelSpec, grid: PeriodGrid, seed=None,
                            size: Optional[int] = None) -> np.ndarray:
    """One period of a periodic-kernel process on the period grid.

    The covariance on an equispaced full period is already circulant, so the
    FFT draw is exact with no padding.
    """
    if kernel.kind != "periodic":
        raise ValueError("periodic pattern needs a periodic kernel")
    if not math.isclose(kernel.period, grid.period_length):
        raise ValueError("kernel period must equal the grid's period length")
    rng = _rng(seed)
    T = grid.points_per_period
    eig = np.clip(np.fft.fft(kernel(np.arange(T) * grid.spacing)).real, 0.0, None)
    draws = _draw_circulant(eig, T, rng, 1 if size is None else size)
    return draws[0] if size is None else draws


@dataclass(frozen=True)
class PCProcessSpec:
    model: str
    grid: PeriodGrid
    n_periods: int
    seed: int = 0
    x_kernel: KernelSpec = field(default=None)
    f_kernel: KernelSpec = field(default=None)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        if self.n_periods < 3:
            raise ValueError("need at least 3 periods")
        p = self.grid.period_length
        if self.f_kernel is None:
            object.__setattr__(self, "f_kernel", KernelSpec("periodic", 1.0, 0.5 * p, p))
        if self.x_kernel is None:
            ratio = 0.2
            object.__setattr__(
                self, "x_kernel",
                KernelSpec("squared_exponential", self.f_kernel.sigma, ratio * self.f_kernel.lengthscale),
            )
        if self.f_kernel.kind != "periodic" or not math.isclose(self.f_kernel.period, p):
            raise ValueError("f kernel must be periodic with the grid's period")
        if self.x_kernel.kind != "squared_exponential":
            raise ValueError("x kernel must be squared exponential")


@dataclass
class Trajectory:
    times: np.ndarray
    pattern: np.ndarray  # f on the full horizon
    irregular: np.ndarray  # X on the full horizon
    values: np.ndarray


def simulate_components(spec: PCProcessSpec) -> Trajectory:
    g = spec.grid
    T = g.points_per_period
    h = g.spacing
    f_seed, x_seed = np.random.SeedSequence(spec.seed).spawn(2)
    f_one = sample_periodic_pattern(spec.f_kernel, g, np.random.default_rng(f_seed))
    f = np.tile(f_one, spec.n_periods)
    n = T * spec.n_periods
    times = (np.arange(n) + 0.5) * h
    pad = math.ceil(np.max(np.abs(f_one)) / h) + 1
    x_times = (np.arange(-pad, n + pad) + 0.5) * h
    x_ext = sample_gp(spec.x_kernel, x_times, np.random.default_rng(x_seed), block=4 * T)
    x = x_ext[pad:pad + n]
    if spec.model == "Y1":
        y = f + x
    elif spec.model == "Y2":
        y = f * x
    else:
        warped = times + f
        if warped.min() < x_times[0] or warped.max() > x_times[-1]:
            raise RuntimeError("warped time outside the extended grid")
        y = np.interp(warped, x_times, x_ext)
    return Trajectory(times, f, x, y)


def make_pc_trajectory(spec: PCProcessSpec):
    """Sample curves for all but the last period, which becomes the focal curve."""
    traj = simulate_components(spec)
    g = spec.grid
    curves = traj.values.reshape(spec.n_periods, g.points_per_period)
    library = CurveLibrary(g, curves[:-1])
    last = curves[-1]
    focal = FocalCurve(last[:g.cut_index], last[g.cut_index:])
    return library, focal
