"""Property-based checks of the invariants the modules promise."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import nodal
from fracdegiorgi.dgcert import DGParams, dg_sides
from fracdegiorgi.gridfn import Ball, ExteriorSpec, FracParams, level_measure, oscillation, truncate
from fracdegiorgi.quadrature import KernelSpec, gagliardo_seminorm, kernel_weights, tail
from fracdegiorgi.regularity import iterate_lemma, iteration_threshold

SETTINGS = settings(max_examples=30, deadline=None)

values = st.lists(st.floats(-3, 3, allow_nan=False), min_size=4, max_size=24)
exteriors = st.builds(
    lambda lv, rv, inf: ExteriorSpec(((-2.0, -1.0, lv), (1.0, 3.0, rv)), inf),
    st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2),
)
params = st.builds(lambda s, p: FracParams(1, s, p), st.floats(0.05, 0.3), st.sampled_from([1.5, 2.0, 3.0]))


@SETTINGS
@given(values, exteriors, st.floats(-2, 2), st.floats(0.05, 0.5))
def test_level_measure_monotone_and_disjoint(vals, ext, k, r):
    u = nodal(vals, ext)
    ball = Ball((0.0,), r)
    plus, minus = level_measure(u, k, "+", ball), level_measure(u, k, "-", ball)
    assert plus + minus <= 2 * r + 1e-12
    assert level_measure(u, k + 0.5, "+", ball) <= plus
    assert level_measure(u, k + 0.5, "-", ball) >= minus


@SETTINGS
@given(values, exteriors, st.floats(-2, 2), st.sampled_from(["+", "-"]))
def test_truncation_properties(vals, ext, k, sign):
    u = nodal(vals, ext)
    t = truncate(u, k, sign)
    assert np.all(t.values >= 0)
    zero = (u.values <= k) if sign == "+" else (u.values >= k)
    assert np.all((t.values == 0) == zero)
    plus, minus = truncate(u, k, "+"), truncate(u, k, "-")
    assert np.allclose(plus.values - minus.values, u.values - k)


@SETTINGS
@given(values, st.floats(0.05, 0.4))
def test_oscillation_monotone_in_radius(vals, r):
    u = nodal(vals)
    assert oscillation(u, Ball((0.0,), r)) <= oscillation(u, Ball((0.0,), 2 * r))


@SETTINGS
@given(values, exteriors, params, st.floats(0.1, 4), st.floats(-5, 5))
def test_seminorm_homogeneous_and_shift_invariant(vals, ext, P, t, c):
    u = nodal(vals, ext)
    ball = Ball((0.1,), 0.6)
    base = gagliardo_seminorm(u, ball, P)
    assert gagliardo_seminorm(u * t, ball, P) == pytest.approx(t**P.p * base, rel=1e-9, abs=1e-12)
    assert gagliardo_seminorm(u + c, ball, P) == pytest.approx(base, rel=1e-9, abs=1e-12)


@SETTINGS
@given(values, exteriors, params, st.floats(0.1, 4), st.floats(0.05, 0.8))
def test_tail_one_homogeneous(vals, ext, P, t, R):
    u = nodal(vals, ext)
    assert tail(u * t, P, (0.0,), R).tail == pytest.approx(t * tail(u, P, (0.0,), R).tail, rel=1e-9, abs=1e-12)


@SETTINGS
@given(st.integers(2, 30), params)
def test_kernel_weights_symmetric(n, P):
    kw = kernel_weights(nodal(np.zeros(n)), KernelSpec(P))
    assert np.allclose(kw.W, kw.W.T, rtol=1e-13, atol=0)
    assert np.all(kw.W >= 0) and np.all(kw.V >= 0)


@SETTINGS
@given(values, exteriors, params, st.floats(-1, 1), st.sampled_from(["+", "-"]))
def test_dg_sides_nonnegative(vals, ext, P, k, sign):
    rep = dg_sides(nodal(vals, ext), P, DGParams(), (0.0,), 0.2, 0.4, k, sign, "strong")
    for v in (rep.lhs_seminorm, rep.lhs_cross, rep.rhs_level_term, rep.rhs_lp_term, rep.rhs_tail_term):
        assert v >= 0


@SETTINGS
@given(st.floats(1.0, 20), st.floats(1.1, 8), st.floats(0.1, 2), st.floats(0.0, 0.999))
def test_iteration_below_threshold_vanishes(C, b, eps, frac):
    assert iterate_lemma(frac * iteration_threshold(C, b, eps), C, b, eps).verdict == "vanishes"
