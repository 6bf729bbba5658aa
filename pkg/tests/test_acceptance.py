"""End-to-end acceptance checks; each prints one pass/fail line in the summary."""

import filecmp
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from depthfc.cli import main
from depthfc.core import PeriodGrid
from depthfc.depth import mbd_bruteforce, mbd_restricted
from depthfc.envelope import FocalOutsideRangeError, build_envelope
from depthfc.forecast import PRACTITIONERS, band, chart_from_coverages, coverage, point_forecast
from depthfc.harness import (
    Sizes,
    exercise_outcomes,
    monte_carlo,
    practitioner_exercise,
    wilson_interval,
)
from depthfc.simulate import (
    KernelSpec,
    PCProcessSpec,
    make_pc_trajectory,
    sample_block_cholesky,
    sample_gp,
    sample_periodic_pattern,
)

K_VALUES = (2, 5, 10, 20)
MODELS = ("Y1", "Y2", "Y3")


def record(number, passed, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}")
    assert passed, detail


@pytest.fixture(scope="module")
def mc_results():
    start = time.perf_counter()
    results = {m: monte_carlo(m, 30, Sizes(), seed=0) for m in MODELS}
    return results, time.perf_counter() - start


@pytest.fixture(scope="module")
def exercise():
    grid = PeriodGrid(50, 25)
    lib, focal = make_pc_trajectory(PCProcessSpec("Y1", grid, 500, seed=0))
    curves = np.vstack([lib.curves, focal.full()])
    outs = exercise_outcomes(curves, grid, horizon=50, m=50, k_max=30)
    res = practitioner_exercise(curves, grid, alpha=0.05, horizon=50, m=50, outcomes=outs)
    return grid, outs, res


def test_c01_depth_oracle():
    rng = np.random.default_rng(20240101)
    start = time.perf_counter()
    worst = 0.0
    exact = True
    for i in range(500):
        n = int(rng.integers(2, 21))
        T = int(rng.integers(1, 51))
        if i % 2:
            x = rng.integers(-3, 4, size=(n, T)).astype(float)
        else:
            x = rng.normal(size=(n, T))
        fast, slow = mbd_restricted(x), mbd_bruteforce(x)
        exact &= bool(np.array_equal(fast.counts, slow.counts))
        worst = max(worst, float(np.max(np.abs(fast.depths - slow.depths))))
    elapsed = time.perf_counter() - start
    record(1, exact and worst <= 1e-12 and elapsed < 10,
           f"500 instances, max |fast - brute| = {worst:.1e}, {elapsed:.2f} s")


def test_c02_depth_speed():
    x = np.random.default_rng(1).normal(size=(1000, 100))
    mbd_restricted(x[:3, :3])  # compile or load the cached kernel
    start = time.perf_counter()
    mbd_restricted(x)
    elapsed = time.perf_counter() - start
    record(2, elapsed < 1.0, f"MBD 1000 x 100 in {elapsed:.3f} s")


def test_c03_envelope_invariants():
    grid = PeriodGrid(30, 15)
    checked = skipped = 0
    bad = []
    for i in range(200):
        model = MODELS[i % 3]
        lib, focal = make_pc_trajectory(PCProcessSpec(model, grid, 61, seed=1000 + i))
        try:
            env = build_envelope(lib, focal)
        except FocalOutsideRangeError:
            skipped += 1
            continue
        checked += 1
        lo, hi = band(lib, env.member_indices, grid.observed)
        if coverage(lo, hi, focal.observed) != env.envelopable.size / grid.n_observed:
            bad.append((i, "coverage"))
        if any(r.accepted and r.p1 < r.p0 for r in env.iterations[1:]):
            bad.append((i, "percentile"))
    record(3, not bad and checked > 0,
           f"{checked} envelopes checked ({skipped} with empty observed overlap), violations {bad}")


def test_c04_bias(mc_results):
    results, elapsed = mc_results
    parts, ok = [], elapsed < 900
    for model, res in results.items():
        errs = res.standardized_errors()
        for k in K_VALUES:
            z, degenerate = errs[k]
            ok &= (not degenerate) and abs(z) < 2
            parts.append(f"{model} k={k}: {z:+.2f}")
    record(4, ok, f"standardized mean errors ({elapsed:.0f} s): " + ", ".join(parts))


@pytest.mark.parametrize("alpha", [0.05, 0.1])
def test_c05_confidence(mc_results, alpha):
    results, _ = mc_results
    floor = wilson_interval((1 - alpha) * 30, 30)[0]
    parts, ok = [], True
    for model, res in results.items():
        probs = res.probabilities(alpha)
        for k in K_VALUES:
            p = probs[k][0]
            ok &= p >= floor
            parts.append(f"{model} k={k}: {p:.3f}")
    record(5, ok, f"alpha={alpha}, floor {floor:.3f}: " + ", ".join(parts))


def test_c06_practitioners(exercise):
    _, _, res = exercise
    p1, p3 = res["P1"], res["P3"]
    ok = (p1.mean_coverage >= 0.85 and abs(p1.probability - 0.95) <= 0.08
          and p3.mean_width < p1.mean_width and p3.mean_k < p1.mean_k)
    record(6, ok,
           f"P1 coverage {p1.mean_coverage:.3f}, prob {p1.probability:.3f}, width {p1.mean_width:.3f}, "
           f"k* {p1.mean_k:.2f} (infeasible {p1.infeasible_fraction:.0%}); "
           f"P3 width {p3.mean_width:.3f}, k* {p3.mean_k:.2f}")


def test_c07_chart_monotone(mc_results, exercise):
    results, _ = mc_results
    charts = 0
    bad = 0

    def check(*cols):
        nonlocal charts, bad
        charts += 1
        bad += any(np.any(np.diff(c) < 0) for c in cols)

    for res in results.values():
        for alpha in (0.05, 0.1):
            for _, mean, low, width in res.charts(alpha):
                check(mean, low, width)
    _, outs, _ = exercise
    by_index = {o.index: o for o in outs}
    for i in range(max(by_index) - 49, max(by_index) + 1):
        cur = by_index[i]
        top = min(cur.n_members, 30)
        if top < 2:
            continue
        replay = np.vstack([by_index[j].coverage for j in range(i - 50, i)])
        ch = chart_from_coverages(replay, cur.width, 0.05, np.arange(2, top + 1))
        check(ch.mean_coverage, ch.alpha_percentile, ch.mean_width)
    record(7, bad == 0, f"{charts} charts, {bad} with a decreasing column")


def test_c08_gp_fidelity():
    grid = PeriodGrid(30, 15)
    t = grid.times
    se = KernelSpec("squared_exponential", 1.0, 0.1)
    per = KernelSpec("periodic", 1.0, 0.5, 1.0)

    def cov(draws):
        return draws.T @ draws / draws.shape[0]

    err_se = np.max(np.abs(cov(sample_gp(se, t, 0, size=2000)) - se.matrix(t)))
    err_per = np.max(np.abs(cov(sample_periodic_pattern(per, grid, 0, size=2000)) - per.matrix(t)))
    circ = cov(sample_gp(se, t, 1, size=5000, method="circulant"))
    chol = cov(sample_block_cholesky(se, t, 2, size=5000, block=10))
    agree_se = np.max(np.abs(circ - chol))
    circ = cov(sample_periodic_pattern(per, grid, 3, size=5000))
    chol = cov(sample_block_cholesky(per, t, 4, size=5000, block=30))
    agree_per = np.max(np.abs(circ - chol))
    ok = err_se < 0.15 and err_per < 0.15 and agree_se < 0.05 and agree_per < 0.05
    record(8, ok, f"kernel error SE {err_se:.3f}, periodic {err_per:.3f}; "
                  f"circulant vs Cholesky SE {agree_se:.3f}, periodic {agree_per:.3f}")


def test_c09_point_forecast():
    grid = PeriodGrid(50, 25)
    wins = {"as-written": 0, "inverse-distance": 0}
    finite = True
    for s in range(100):
        lib, focal = make_pc_trajectory(PCProcessSpec("Y1", grid, 201, seed=5000 + s))
        try:
            env = build_envelope(lib, focal)
        except FocalOutsideRangeError:
            continue
        F = grid.forecast
        base = np.mean((lib.curves[:, F].mean(axis=0) - focal.truth) ** 2)
        for mode in wins:
            mse = np.mean((point_forecast(lib, env, focal, mode)[F] - focal.truth) ** 2)
            finite &= bool(np.isfinite(mse))
            wins[mode] += int(mse < base)
    ok = finite and min(wins.values()) >= 60
    record(9, ok, f"problems beating the library mean out of 100: {wins}")


def test_c10_cli_determinism(tmp_path):
    def run(tag):
        d = tmp_path / tag
        d.mkdir()
        series = str(d / "y.csv")
        cmds = [
            ["simulate", "--model", "Y2", "--periods", "40", "--seed", "7", "-T", "20", "--out", series,
             "--truth", str(d / "truth.csv")],
            ["forecast", series, "-T", "20", "-m", "15", "--k-max", "10", "--truth", str(d / "truth.csv"),
             "--out-dir", str(d / "fc"), "--audit", "--rule", "0.5", "0.2"],
            ["tune", series, "-T", "20", "-m", "15", "--k-max", "10", "--out-dir", str(d / "tune")],
            ["mbd", series, "-T", "20", "--out", str(d / "depth.csv")],
            ["evaluate", "bias", "--model", "Y1", "--trials", "10", "--n", "30", "-m", "10", "-T", "16",
             "--k-max", "8", "--k-values", "2,5", "--seed", "3", "--out-dir", str(d / "ev")],
            ["evaluate", "confidence", "--model", "Y3", "--trials", "10", "--n", "30", "-m", "10", "-T", "16",
             "--k-max", "8", "--k-values", "2,5", "--seed", "3", "--out-dir", str(d / "ev")],
            ["evaluate", "exercise", "--model", "Y1", "--periods", "60", "--horizon", "10", "-m", "10",
             "-T", "16", "--k-max", "8", "--seed", "3", "--out-dir", str(d / "ev")],
        ]
        codes = [main(c) for c in cmds]
        files = sorted(p.relative_to(d) for p in d.rglob("*") if p.is_file())
        return codes, files

    codes_a, files_a = run("a")
    codes_b, files_b = run("b")
    same = files_a == files_b and all(
        filecmp.cmp(tmp_path / "a" / f, tmp_path / "b" / f, shallow=False) for f in files_a)
    ok = codes_a == codes_b and set(codes_a) == {0} and same and len(files_a) >= 10
    record(10, ok, f"{len(files_a)} output files from 7 commands, exit codes {codes_a}, identical={same}")
