import math

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import make, nodal
from fracdegiorgi.energy import SolveConfig
from fracdegiorgi.gridfn import ExteriorSpec, FracParams
from fracdegiorgi.operator import RightHandSide, apply_pv, linear_oracle, solve, weak_residual
from fracdegiorgi.quadrature import KernelSpec
from fracdegiorgi.suite import p2_oracle


def K(s=0.25, p=2.0):
    return KernelSpec(FracParams(1, s, p))


def test_pv_constant_is_zero():
    u = make("constant", 32, "extend", c=2.0)
    res = apply_pv(u, 0.1, K())
    assert res.value == 0.0 and all(v == 0.0 for v in res.truncations)


def test_pv_odd_ramp_vanishes():
    ext = ExteriorSpec(((-math.inf, -8.0, -8.0), (8.0, math.inf, 8.0)), 0.0)
    edges = np.linspace(-8, 8, 258)
    u = nodal(0.5 * (edges[1:] + edges[:-1]), ext, a=-8.0, b=8.0)
    res = apply_pv(u, 0.0, K())
    assert abs(res.value) <= 1e-3


def test_pv_step_against_closed_form():
    s, x = 0.25, -0.2
    u = make("step", 64, "extend")
    res = apply_pv(u, x, K(s))
    ref = -quad(lambda y: (y - x) ** -1.5, 0, math.inf)[0]
    assert ref == pytest.approx(-2 / math.sqrt(0.2))
    assert res.value == pytest.approx(ref, rel=1e-10)
    assert res.converged


def test_pv_smooth_p3_extrapolates():
    u = make("power", 512, {"at_infinity": 1.0}, beta=2.0)
    res = apply_pv(u, 0.3, KernelSpec(FracParams(1, 0.3, 3.0)))
    assert res.converged and math.isfinite(res.value)
    assert res.trace_csv().startswith("delta,truncated_integral")


def test_pv_is_1d_only():
    with pytest.raises(NotImplementedError):
        apply_pv(make("constant", 8, dim=2, c=1.0), 0.0, K())


def test_residual_zero():
    u = nodal(np.zeros(16))
    assert weak_residual(u, K(), RightHandSide.preset("zero", -1, 1, 16)).max_abs == 0.0


def test_rhs_bound_checked():
    with pytest.raises(ValueError):
        RightHandSide(np.array([1.0, -2.0]), 1.0)
    rhs = RightHandSide.preset("ramp", -1, 1, 8, 2.0)
    assert rhs.f0 == pytest.approx(np.max(np.abs(rhs.values)))


def test_solve_zero_data():
    res = solve(RightHandSide.preset("zero", -1, 1, 32), ExteriorSpec(), K())
    assert res.ok and np.all(res.u.values == 0)


@pytest.mark.parametrize("fname", ["zero", "constant", "ramp"])
def test_solve_matches_oracles(fname):
    ext = ExteriorSpec(((-3.0, -1.0, 1.0),), 0.25)
    rhs = RightHandSide.preset(fname, -1, 1, 40, 1.5)
    res = solve(rhs, ext, K(0.3))
    assert res.ok
    ref = p2_oracle(-1.0, 1.0, 40, ext, 0.3, rhs.values)
    assert np.max(np.abs(res.u.values - ref)) <= 1e-6
    assert np.max(np.abs(linear_oracle(res.u, K(0.3), rhs.values) - ref)) <= 1e-10


def test_solution_passes_both_one_sided_tests():
    ext = ExteriorSpec(((-math.inf, -1.0, 1.0),), 0.0)
    rhs = RightHandSide.preset("constant", -1, 1, 32, 1.0)
    res = solve(rhs, ext, K(0.3, 2.5))
    rep = weak_residual(res.u, K(0.3, 2.5), rhs)
    assert rep.supersolution(res.residual_tol) and rep.subsolution(res.residual_tol)
    hats = weak_residual(res.u, K(0.3, 2.5), rhs, test="hat")
    assert hats.residuals.shape == (30,) and hats.max_abs <= 2 * res.residual_tol


def test_supersolution_from_lowered_source():
    # solving L u = f - 1 = 0 gives <L u, φ> <= ∫ f φ for φ >= 0 (supersolution of L u = f)
    ext = ExteriorSpec(((-math.inf, -1.0, 1.0),), 0.0)
    f = RightHandSide.preset("constant", -1, 1, 32, 1.0)
    lowered = RightHandSide.preset("zero", -1, 1, 32)
    u = solve(lowered, ext, K()).u
    rep = weak_residual(u, K(), f)
    assert rep.supersolution(1e-6) and not rep.subsolution(1e-6)


def test_solve_p_not_two_residual():
    ext = ExteriorSpec(((-math.inf, -1.0, 2.0),), -1.0)
    res = solve(RightHandSide.preset("ramp", -1, 1, 32, 0.5), ext, K(0.2, 1.5), SolveConfig())
    assert res.ok, res.residual.max_abs
