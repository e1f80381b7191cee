import math

import numpy as np
import pytest
from scipy.integrate import dblquad, quad

from conftest import make, nodal
from fracdegiorgi.dgcert import appendix_oracle
from fracdegiorgi.gridfn import Ball, ExteriorSpec, FracParams, truncate
from fracdegiorgi.quadrature import (
    KernelSpec,
    SeminormDivergesError,
    cross_term,
    gagliardo_seminorm,
    interval_pair_integral,
    kernel_weights,
    lp_norm_on_ball,
    merge_runs,
    tail,
    weighted_norm,
)
from fracdegiorgi.suite import disc_ramp_seminorm


def test_adjacent_unit_cells_weight():
    # verified value of ∫_0^1 ∫_1^2 (y - x)^(-1.5) dy dx
    u = nodal([0.0, 0.0], a=0.0, b=2.0)
    kw = kernel_weights(u, KernelSpec(FracParams(1, 0.25, 2.0)))
    ref = dblquad(lambda y, x: (y - x) ** -1.5, 0, 1, 1, 2)[0]
    assert kw.W[0, 1] == pytest.approx(8 - 4 * math.sqrt(2), rel=1e-12)
    assert kw.W[0, 1] == pytest.approx(ref, rel=1e-6)


def test_weights_symmetric_and_scaled():
    u = make("ramp", 40, slope=1.0)
    P = FracParams(1, 0.3, 2.0)
    w1 = kernel_weights(u, KernelSpec.preset(P))
    w3 = kernel_weights(u, KernelSpec.preset(P, "scaled", 3.0))
    assert np.array_equal(w1.W, w1.W.T)
    assert np.allclose(w3.W, 3 * w1.W, rtol=1e-14)
    assert np.allclose(w3.V, 3 * w1.V, rtol=1e-14)


def test_exterior_weight_against_quad():
    u = nodal([0.0] * 8, ExteriorSpec(((1.0, 2.5, 1.0),), 0.0))
    P = FracParams(1, 0.35, 2.0)
    kw = kernel_weights(u, KernelSpec(P))
    alpha = P.sp
    k = [i for i, piece in enumerate(kw.pieces) if piece[:2] == (1.0, 2.5)][0]
    inner = lambda x: ((1.0 - x) ** -alpha - (2.5 - x) ** -alpha) / alpha  # noqa: E731
    ref = quad(inner, 0.75, 1.0)[0]
    assert kw.V[7, k] == pytest.approx(ref, rel=1e-9)


def test_kernel_weights_refuse_supercritical():
    with pytest.raises(SeminormDivergesError):
        kernel_weights(make("step", 8), KernelSpec(FracParams(1, 0.6, 2.0)))


def test_interval_pair_integral_disjoint():
    gam = -1.5
    ref = dblquad(lambda y, x: (y - x) ** gam, 0, 0.5, 1.0, 3.0)[0]
    assert interval_pair_integral(0.0, 0.5, 1.0, 3.0, gam) == pytest.approx(ref, rel=1e-9)


def test_merge_runs():
    left, right, vals = merge_runs(np.array([0, 1, 2, 3.0]), np.array([1, 2, 3, 4.0]), np.array([5, 5, 7, 7.0]))
    assert list(left) == [0, 2] and list(right) == [2, 4] and list(vals) == [5, 7]


def test_seminorm_constant_is_zero(one):
    assert gagliardo_seminorm(one, Ball((0.0,), 0.5), FracParams(1, 0.25, 2)) == 0.0


@pytest.mark.parametrize("mode", ["exact", "smooth"])
def test_seminorm_identity_on_unit_interval(mode):
    s = 0.25
    u = make("ramp", 1024, a=0.0, b=1.0, slope=1.0)
    val = gagliardo_seminorm(u, None, FracParams(1, s, 2.0), mode=mode)
    assert val == pytest.approx(2 / ((2 - 2 * s) * (3 - 2 * s)), rel=0.01)


def test_seminorm_normalized_limit():
    # (1 - s) [x]^p on (0, 1) has a closed form in (s, p); smooth mode handles sp >= 1
    for s, p in ((0.9, 2.0), (0.95, 3.0)):
        u = make("ramp", 512, a=0.0, b=1.0, slope=1.0)
        val = gagliardo_seminorm(u, None, FracParams(1, s, p), normalized=True)
        exact = (1 - s) * 2 / ((p - s * p) * (p - s * p + 1))
        assert val == pytest.approx(exact, rel=0.01)


def test_seminorm_appendix_value():
    k, r = 0.5, 0.5
    w = truncate(make("step", 4096, "extend"), k, "-")
    val = gagliardo_seminorm(w, Ball((0.0,), r), FracParams(1, 0.25, 2.0))
    assert val == pytest.approx(0.828427, rel=0.01)
    assert val <= appendix_oracle(0.25, 2, 0.0, r, 0.75, k).upper_bound


def test_seminorm_discontinuous_supercritical_refused():
    with pytest.raises(SeminormDivergesError):
        gagliardo_seminorm(make("step", 64), None, FracParams(1, 0.75, 2.0))


@pytest.mark.parametrize("s", [0.5, 0.8])
def test_seminorm_2d_disc_oracle(s):
    kappa = 0.4
    u = make("ramp", 64, dim=2, slope=kappa, intercept=0.5)
    val = gagliardo_seminorm(u, Ball((0.0, 0.0), 1.0), FracParams(2, s, 2.0))
    assert val == pytest.approx(disc_ramp_seminorm(s, 2.0, kappa), rel=0.02)


def test_weighted_norm_of_one(one):
    assert weighted_norm(one, FracParams(1, 0.5, 2.0)) == pytest.approx(2.0, rel=1e-10)


def test_weighted_norm_homogeneous(one):
    P = FracParams(1, 0.5, 2.0)
    assert weighted_norm(one * 2.0, P) == pytest.approx(2 * weighted_norm(one, P), rel=1e-12)


@pytest.mark.parametrize("R", [0.1, 0.5, 0.9])
def test_tail_closed_forms(one, step, R):
    P = FracParams(1, 0.25, 2.0)
    assert tail(one, P, (0.0,), R).tail == pytest.approx(4.0, abs=1e-6)
    assert tail(step, P, (0.0,), R).tail == pytest.approx(2.0, abs=1e-6)
    assert tail(one * 0.0, P, (0.0,), R).tail == 0.0


def test_tail_off_centre_against_quad():
    u = make("ramp", 200, {"pieces": [{"from": 1, "to": 2, "value": 3.0}], "at_infinity": 0.5}, slope=1.0)
    P = FracParams(1, 0.3, 2.5)
    x0, R = 0.2, 0.4
    a = P.sp

    def f(x):
        return abs(u.evaluate((x,)) if -1 < x < 1 else u.exterior.value_at(x)) ** (P.p - 1) * abs(x - x0) ** (-1 - a)

    pieces = [(-math.inf, -1.0), (1.0, 2.0), (2.0, math.inf)]
    pieces += [(lo, hi) for lo, hi in zip(u.edges[:-1], u.edges[1:]) if hi <= x0 - R or lo >= x0 + R]
    pieces += [(lo, min(hi, x0 - R)) for lo, hi in zip(u.edges[:-1], u.edges[1:]) if lo < x0 - R < hi]
    pieces += [(max(lo, x0 + R), hi) for lo, hi in zip(u.edges[:-1], u.edges[1:]) if lo < x0 + R < hi]
    integral = sum(quad(f, lo, hi, epsabs=1e-13, epsrel=1e-11)[0] for lo, hi in pieces)
    exact = (R**a * integral) ** (1 / (P.p - 1))
    assert tail(u, P, (x0,), R).tail == pytest.approx(exact, rel=1e-5)


def test_tail_normalized_and_bar(one):
    P = FracParams(1, 0.25, 2.0)
    t = tail(one, P, (0.0,), 0.5)
    tn = tail(one, P, (0.0,), 0.5, normalized=True)
    assert tn.tail == pytest.approx((1 - 0.25) * t.tail, rel=1e-12)
    assert t.tail_bar == pytest.approx(t.tail * 0.5 ** (-P.sp / (P.p - 1)), rel=1e-12)


def test_tail_2d_constant():
    # the grid part is a midpoint rule in 2D: first-order accurate, converging under refinement
    s, p = 0.3, 2.0
    exact = 2 * math.pi / (s * p)
    errs = []
    for N in (32, 64):
        u = make("constant", N, {"at_infinity": 1.0}, dim=2, c=1.0)
        errs.append(abs(tail(u, FracParams(2, s, p), (0.0, 0.0), 0.5).tail / exact - 1))
    assert errs[0] < 5e-3 and errs[1] < errs[0]


def test_lp_norm_on_ball(one):
    assert lp_norm_on_ball(one, Ball((0.0,), 0.5), 2.0) == pytest.approx(1.0)


def test_cross_term_wedge():
    s, p, r, k = 0.25, 2.0, 0.25, 0.1
    u = make("step", 4096, "extend")
    P = FracParams(1, s, p)
    val = cross_term(u, k, "-", Ball((0.0,), r), P)
    wedge = k * (1 - k) ** (p - 1) * r ** (1 - s * p) / (1 - s * p)
    assert wedge == pytest.approx(0.09)
    assert val >= wedge
    assert val == pytest.approx(appendix_oracle(s, p, 0.0, r, 2 * r, k).cross_term, rel=0.01)


def test_cross_term_vanishes_one_signed():
    u = make("ramp", 64, {"at_infinity": 0.0}, slope=0.2, intercept=0.3)
    assert cross_term(u, 2.0, "-", Ball((0.0,), 0.5), FracParams(1, 0.25, 2)) == 0.0


def test_cross_term_reflection():
    u = make("ramp", 128, {"pieces": [{"from": -3, "to": -1, "value": -0.5}], "at_infinity": 1.0},
             slope=0.8, intercept=0.1)
    P = FracParams(1, 0.3, 2.5)
    ball = Ball((0.1,), 0.3)
    assert cross_term(u, 0.2, "+", ball, P) == pytest.approx(cross_term(-u, -0.2, "-", ball, P), rel=1e-12)
