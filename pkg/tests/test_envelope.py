import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _reference import reference_envelope
from conftest import constant_library
from depthfc import _kernels_numba, _kernels_numpy
from depthfc.core import CurveLibrary, FocalCurve, PeriodGrid, pointwise_hull
from depthfc.envelope import (
    FocalOutsideRangeError,
    build_envelope,
    envelopable_set,
    greedy_cover_batch,
)


def test_envelopable_set_full(four_constants):
    lib, focal = four_constants
    np.testing.assert_array_equal(envelopable_set(lib, focal), np.arange(4))


def test_envelopable_set_empty(four_constants):
    lib, _ = four_constants
    with pytest.raises(FocalOutsideRangeError, match="focal outside sample range"):
        envelopable_set(lib, FocalCurve(np.full(4, 10.0)))


def test_envelopable_set_focal_is_member(four_constants):
    lib, _ = four_constants
    focal = FocalCurve(lib.curves[2, :4])
    np.testing.assert_array_equal(envelopable_set(lib, focal), np.arange(4))


def test_greedy_batch_constants():
    cands = np.array([[0.5] * 4, [2.0] * 4, [5.0] * 4, [-3.0] * 4])
    pos, lam = greedy_cover_batch(cands, np.ones(4))
    assert list(pos) == [0, 1] and lam == 1.0


def test_greedy_single_candidate():
    pos, lam = greedy_cover_batch([[1.0, 0.0, 1.0]], [1.0, 1.0, 1.0])
    assert list(pos) == [0] and lam == pytest.approx(2 / 3)


def test_greedy_candidates_equal_to_focal():
    # the one-curve band already covers everything, so nothing else joins
    pos, lam = greedy_cover_batch(np.ones((3, 4)), np.ones(4))
    assert list(pos) == [0] and lam == 1.0


def test_greedy_second_curve_lifts_degenerate_band():
    pos, lam = greedy_cover_batch([[1.0, 2.0], [2.0, 1.0], [1.5, 1.5]], [1.5, 1.5])
    assert list(pos) == [0, 1] and lam == 1.0


def test_four_constants_trace(four_constants):
    lib, focal = four_constants
    env = build_envelope(lib, focal)
    assert sorted(env.member_indices) == [0, 1, 2, 3]
    first, second = env.iterations
    assert set(first.batch) == {0, 1} and first.accepted
    assert set(second.batch) == {2, 3} and second.accepted
    assert second.p0 == 1.0 and second.p1 == 1.0
    depth = dict(zip(env.member_indices.tolist(), env.member_depths))
    assert env.focal_depth == pytest.approx(0.8)
    assert depth[0] == pytest.approx(0.7) and depth[1] == pytest.approx(0.7)
    assert depth[2] == pytest.approx(0.4) and depth[3] == pytest.approx(0.4)
    assert env.focal_percentile == 1.0


def test_two_curve_library():
    grid = PeriodGrid(4, 2)
    lib = constant_library(grid, [0.0, 2.0])
    env = build_envelope(lib, FocalCurve(np.ones(2)))
    assert sorted(env.member_indices) == [0, 1] and len(env.iterations) == 1


def test_later_batches_rejected():
    # found with the reference implementation; both later batches lower the percentile
    curves = np.array([
        [-1, -4, -4, -4], [-4, 1, -3, 0], [-3, 2, 3, 3],
        [-2, -1, 3, 3], [-4, 1, -4, 1], [-4, 1, 4, -1],
    ], dtype=float)
    lib = CurveLibrary(PeriodGrid(4, 3), curves)
    env = build_envelope(lib, FocalCurve([2.0, -1.0, -2.0]))
    assert env.member_indices.tolist() == [0, 3]
    assert [r.accepted for r in env.iterations] == [True, False, False]
    assert all(r.p1 < r.p0 for r in env.iterations[1:])


small_problems = st.tuples(st.integers(2, 9), st.integers(1, 4), st.integers(0, 2**32 - 1))


def _problem(n, cut, seed):
    rng = np.random.default_rng(seed)
    curves = rng.integers(-3, 4, size=(n, cut + 2)).astype(float)
    focal = rng.integers(-2, 3, size=cut).astype(float)
    return CurveLibrary(PeriodGrid(cut + 2, cut), curves), FocalCurve(focal)


@settings(max_examples=300, deadline=None)
@given(small_problems)
def test_matches_reference(problem):
    lib, focal = _problem(*problem)
    try:
        expected, trace = reference_envelope(lib.curves, focal.observed)
    except ValueError:
        with pytest.raises(FocalOutsideRangeError):
            build_envelope(lib, focal)
        return
    env = build_envelope(lib, focal)
    assert env.member_indices.tolist() == expected
    assert [(r.batch, r.accepted) for r in env.iterations] == trace


@settings(max_examples=200, deadline=None)
@given(small_problems)
def test_envelope_invariants(problem):
    lib, focal = _problem(*problem)
    try:
        env = build_envelope(lib, focal)
    except FocalOutsideRangeError:
        return
    members = env.member_indices
    assert members.size == np.unique(members).size > 0
    # the envelope covers the focal wherever the whole sample does
    c = lib.grid.cut_index
    lo, hi = pointwise_hull(lib.curves[members, :c])
    inside = (lo <= focal.observed) & (focal.observed <= hi)
    assert np.count_nonzero(inside) == env.envelopable.size
    for rec in env.iterations[1:]:
        if rec.accepted:
            assert rec.p1 >= rec.p0
    assert np.all((env.member_depths >= 0) & (env.member_depths <= 1))


def test_determinism():
    rng = np.random.default_rng(3)
    lib = CurveLibrary(PeriodGrid(20, 10), rng.normal(size=(60, 20)))
    focal = FocalCurve(rng.normal(size=10) * 0.5)
    a, b = build_envelope(lib, focal), build_envelope(lib, focal)
    np.testing.assert_array_equal(a.member_indices, b.member_indices)
    assert a.audit_lines() == b.audit_lines()


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 40), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_greedy_backends_agree(n, P, seed):
    rng = np.random.default_rng(seed)
    cands = rng.integers(-3, 4, size=(n, P)).astype(float)
    focal = rng.integers(-2, 3, size=P).astype(float)
    a = _kernels_numpy.greedy_cover(cands, focal)
    b = _kernels_numba.greedy_cover(cands, focal)
    np.testing.assert_array_equal(a[0], b[0])
    assert a[1] == b[1]


def test_audit_format(four_constants):
    lib, focal = four_constants
    lines = build_envelope(lib, focal).audit_lines()
    assert lines[0].split("\t") == ["iteration", "batch", "lambda", "p0", "p1", "accepted"]
    assert lines[1].split("\t")[3:] == ["-", "-", "1"]
