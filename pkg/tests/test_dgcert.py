import math

import pytest

from conftest import make
from fracdegiorgi.dgcert import (
    DGParams,
    SamplingPlan,
    appendix_oracle,
    certify,
    default_plan,
    dg_sides,
    step_function,
    trend_probe,
)
from fracdegiorgi.gridfn import FracParams

P = FracParams(1, 0.25, 2.0)


def test_dgparams_validation():
    with pytest.raises(ValueError):
        DGParams(H=0.5)
    with pytest.raises(ValueError):
        DGParams(d=-1.0)
    with pytest.raises(ValueError):
        DGParams(lam=float("inf"))


def test_constant_has_zero_lhs():
    u = make("constant", 64, "extend", c=0.4)
    rep = dg_sides(u, P, DGParams(), (0.0,), 0.2, 0.4, 0.4, "+", "strong")
    assert rep.lhs == 0.0 and rep.ratio == 0.0 and rep.holds


def test_appendix_sides():
    u = step_function(4096)
    r, R, k = 0.5, 0.75, 0.5
    rep = dg_sides(u, P, DGParams(), (0.0,), r, R, k, "-", "weak")
    assert rep.lhs_seminorm == pytest.approx(0.828427, rel=0.01)
    assert rep.rhs_level_term == 0.0
    # ‖(u - k)_-‖^p on B_R is k^p R, times R^((1-s)p) / (R - r)^p
    assert rep.rhs_lp_term == pytest.approx(R ** 1.5 / (R - r) ** 2 * k**2 * R, rel=1e-9)
    # (R/(R-r))^(1+sp) ‖w‖_1 r^(-sp) Tail(w; 0, r)^(p-1), with Tail^(p-1) = k / (sp)
    assert rep.rhs_tail_term == pytest.approx((R / (R - r)) ** 1.5 * (k * R) * r**-0.5 * k / 0.5, rel=1e-6)
    assert rep.rhs >= appendix_oracle(0.25, 2.0, 0.0, r, R, k).rhs_lower_bound
    assert rep.holds


def test_strong_mode_adds_cross_term():
    u = step_function(4096)
    weak = dg_sides(u, P, DGParams(), (0.0,), 0.25, 0.5, 0.1, "-", "weak")
    strong = dg_sides(u, P, DGParams(), (0.0,), 0.25, 0.5, 0.1, "-", "strong")
    assert weak.lhs_cross == 0.0
    assert strong.lhs_cross >= 0.09
    assert strong.lhs == pytest.approx(weak.lhs + strong.lhs_cross)


def test_level_term_uses_d_and_lambda():
    u = step_function(512)
    rep = dg_sides(u, P, DGParams(d=2.0, lam=0.5), (0.0,), 0.25, 0.5, 0.5, "-", "weak")
    # |A^-(0.5, 0, 0.5)| = 0.5
    assert rep.rhs_level_term == pytest.approx(0.5**0.5 * 2.0**2 * 0.5, rel=1e-12)


def test_normalized_mode_scales_lhs():
    u = step_function(1024)
    plain = dg_sides(u, P, DGParams(), (0.0,), 0.25, 0.5, 0.3, "-", "weak")
    norm = dg_sides(u, P, DGParams(), (0.0,), 0.25, 0.5, 0.3, "-", "weak", normalized=True)
    assert norm.lhs_seminorm == pytest.approx(0.75 * plain.lhs_seminorm, rel=1e-12)


def test_geometry_checked():
    u = step_function(64)
    with pytest.raises(ValueError):
        dg_sides(u, P, DGParams(), (0.0,), 0.5, 0.4, 0.5, "-")
    with pytest.raises(ValueError):
        dg_sides(u, P, DGParams(), (0.8,), 0.1, 0.3, 0.5, "-")


def test_certify_constant():
    cert = certify(make("constant", 64, "extend", c=2.0), P)
    assert cert.minimal_H == 1.0 and cert.verdict == "certified"


def test_certify_step_weak_stable():
    Hs = []
    for n in (256, 1024):
        cert = certify(step_function(n), P, mode="weak")
        assert cert.verdict == "certified"
        Hs.append(cert.minimal_H)
    assert max(Hs) / min(Hs) <= 2


def test_trend_probe_step_strong():
    probe = trend_probe(step_function(4096), P, DGParams(), "-", "strong")
    assert len(probe.quotients) == 3
    # ratio(k/2) / ratio(k) tends to 2^(p-1) = 2
    assert all(1.8 <= q <= 2.2 for q in probe.quotients)
    assert probe.increasing_by(1.5)


def test_certify_step_strong_violated():
    cert = certify(step_function(2048), P, mode="strong", signs=("-",))
    assert cert.verdict == "violated-trend"
    assert cert.to_dict()["trend"][0]["sign"] == "-"


def test_plan_is_reproducible_and_admissible():
    u = step_function(128)
    a, b = default_plan(u), default_plan(u)
    assert a == b
    assert all(R < u.dist_to_boundary(c) for c, r, R, k, sg in a.samples(u))
    with pytest.raises(ValueError):
        SamplingPlan((), ((0.1, 0.2),), (0.0,))


def test_appendix_oracle_values():
    o = appendix_oracle(0.25, 2.0, 0.0, 0.5, 0.75, 0.5)
    assert o.seminorm_term == pytest.approx(2 * 0.25 * 0.5**0.5 * (2 - 2**0.5) / (0.5 * 0.5), rel=1e-14)
    assert o.seminorm_term == pytest.approx(0.828427, abs=1e-6)
    assert o.upper_bound == pytest.approx(1.414214, abs=1e-6)
    assert appendix_oracle(0.25, 2.0, 0.6, 0.3, 0.5, 0.5).seminorm_term == 0.0


def test_wedge_over_level_term_blows_up():
    ratios = [appendix_oracle(0.25, 2.0, 0.0, 0.25, 0.5, k).wedge_lower_bound / k**2 for k in (0.1, 0.05, 0.025)]
    assert ratios[1] / ratios[0] == pytest.approx(2 * 0.95 / 0.9, rel=1e-12)
    assert ratios[2] > ratios[1] > ratios[0]


def test_certify_2d_constant():
    u = make("constant", 16, {"at_infinity": 1.0}, dim=2, c=1.0)
    cert = certify(u, FracParams(2, 0.25, 2.0), plan=SamplingPlan(((0.0, 0.0),), ((0.2, 0.4),), (0.5, 1.5)))
    assert cert.minimal_H == 1.0


def test_report_roundtrip_keys():
    rep = dg_sides(step_function(256), P, DGParams(), (0.0,), 0.25, 0.5, 0.5, "-", "strong")
    d = rep.to_dict()
    for key in ("lhs_seminorm", "lhs_cross", "rhs_level_term", "rhs_lp_term", "rhs_tail_term", "ratio", "holds"):
        assert key in d
    assert math.isfinite(d["ratio"])
