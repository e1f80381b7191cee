"""Both sides of the fractional De Giorgi inequalities, sampled certificates,
and closed forms for the one-dimensional step function.

For a level ``k`` and a sign ``±`` the weak inequality reads

    [(u-k)_±]^p_{W^{s,p}(B_r)}
        <= H { R^λ d^p |A^±(k, x0, R)|
               + R^((1-s)p) / (R-r)^p  ||(u-k)_±||^p_{L^p(B_R)}
               + (R/(R-r))^(n+sp) ||(u-k)_±||_{L^1(B_R)} Tailbar((u-k)_±; x0, r)^(p-1) }

and the strong one adds the cross term to the left-hand side.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._workers import pmap
from .gridfn import Ball, FracParams, GridFunction, level_measure, sup_inf_on_ball, truncate
from .quadrature import (
    SeminormDivergesError,
    cross_term,
    gagliardo_seminorm,
    lp_norm_on_ball,
    tail,
)

MODES = ("weak", "strong")
SIGNS = ("+", "-")


@dataclass(frozen=True)
class DGParams:
    d: float = 0.0
    H: float = 1.0
    lam: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.d) and self.d >= 0):
            raise ValueError(f"d must be finite and >= 0, got {self.d}")
        if not (math.isfinite(self.H) and self.H >= 1):
            raise ValueError(f"H must be finite and >= 1, got {self.H}")
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")


def _ratio(lhs: float, rhs: float) -> float:
    if lhs == 0.0:
        return 0.0
    return lhs / rhs if rhs > 0 else math.inf


@dataclass(frozen=True)
class DGInequalityReport:
    lhs_seminorm: float
    lhs_cross: float
    rhs_level_term: float
    rhs_lp_term: float
    rhs_tail_term: float
    mode: str
    sign: str
    x0: tuple
    r: float
    R: float
    k: float
    H: float = 1.0

    @property
    def lhs(self) -> float:
        return self.lhs_seminorm + self.lhs_cross

    @property
    def rhs(self) -> float:
        """Bracketed right-hand side, without the factor H."""
        return self.rhs_level_term + self.rhs_lp_term + self.rhs_tail_term

    @property
    def ratio(self) -> float:
        """LHS / RHS at H = 1; the smallest admissible H for this sample is max(1, ratio)."""
        return _ratio(self.lhs, self.rhs)

    @property
    def holds(self) -> bool:
        return self.lhs <= self.H * self.rhs * (1 + 1e-12)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["x0"] = list(self.x0)
        out.update(lhs=self.lhs, rhs=self.rhs, ratio=self.ratio, holds=self.holds)
        return out


def _check_geometry(u: GridFunction, x0, r: float, R: float) -> tuple:
    x0 = tuple(float(t) for t in np.atleast_1d(np.asarray(x0, dtype=float)))
    if len(x0) != u.n:
        raise ValueError(f"x0 has {len(x0)} coordinates, expected {u.n}")
    if not u.contains(x0):
        raise ValueError(f"x0 = {x0} lies outside the domain")
    dist = u.dist_to_boundary(x0)
    if not (0 < r < R < dist):
        raise ValueError(f"radii must satisfy 0 < r < R < dist(x0, boundary) = {dist:.6g}; got r={r}, R={R}")
    return x0


def dg_sides(
    u: GridFunction,
    params: FracParams,
    dg: DGParams,
    x0,
    r: float,
    R: float,
    k: float,
    sign: str,
    mode: str = "weak",
    *,
    normalized: bool = False,
    cross_mode: str = "full",
    seminorm_mode: str | None = None,
) -> DGInequalityReport:
    """Evaluate every summand of the weak or strong Caccioppoli inequality.

    ``normalized`` applies the s -> 1 convention: the left-hand side carries a
    factor ``1 - s`` (equivalently ``H`` becomes ``H / (1 - s)``) and the tail
    is normalized.  ``cross_mode='ball'`` restricts the inner integral of the
    cross term to ``B_r(x0)``.
    """
    if sign not in SIGNS:
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    if mode not in MODES:
        raise ValueError(f"mode must be 'weak' or 'strong', got {mode!r}")
    if cross_mode not in ("full", "ball"):
        raise ValueError(f"cross_mode must be 'full' or 'ball', got {cross_mode!r}")
    r, R, k = float(r), float(R), float(k)
    x0 = _check_geometry(u, x0, r, R)
    n, s, p = params.n, params.s, params.p
    inner, outer = Ball(x0, r), Ball(x0, R)
    w = truncate(u, k, sign)

    semi = gagliardo_seminorm(w, inner, params, mode=seminorm_mode)
    cross = 0.0
    if mode == "strong":
        cross = cross_term(u, k, sign, inner, params, restrict_to_ball=cross_mode == "ball")
    if normalized:
        semi *= 1.0 - s
        cross *= 1.0 - s

    level = R**dg.lam * dg.d**p * level_measure(u, k, sign, outer) if dg.d > 0 else 0.0
    lp = R ** ((1 - s) * p) / (R - r) ** p * lp_norm_on_ball(w, outer, p)
    l1 = lp_norm_on_ball(w, outer, 1.0)
    tail_term = 0.0
    if l1 > 0:
        tb = tail(w, params, x0, r, normalized=normalized).tail_bar
        tail_term = (R / (R - r)) ** (n + s * p) * l1 * tb ** (p - 1)
    return DGInequalityReport(semi, cross, level, lp, tail_term, mode, sign, x0, r, R, k, dg.H)


# ---------------------------------------------------------------------------
# sampled certificates


@dataclass(frozen=True)
class SamplingPlan:
    centers: tuple
    radii: tuple  # (r, R) pairs
    levels: tuple
    signs: tuple = SIGNS

    def __post_init__(self):
        if not (self.centers and self.radii and self.levels and self.signs):
            raise ValueError("sampling plan is empty")
        for sg in self.signs:
            if sg not in SIGNS:
                raise ValueError(f"unknown sign {sg!r}")

    def samples(self, u: GridFunction) -> list[tuple]:
        out = []
        for c in self.centers:
            c = tuple(np.atleast_1d(c).astype(float))
            dist = u.dist_to_boundary(c)
            for r, R in self.radii:
                if R >= dist:
                    continue
                for k in self.levels:
                    for sg in self.signs:
                        out.append((c, r, R, k, sg))
        return out


def default_plan(u: GridFunction, signs=SIGNS, n_centers: int = 9, n_radii: int = 6, n_quantiles: int = 11) -> SamplingPlan:
    """Reproducible lattice: 9 centres, 6 dyadic (ρ, 2ρ) pairs, quantile levels plus min-1 and max+1."""
    L = u.b - u.a
    line = np.linspace(u.a + 0.1 * L, u.b - 0.1 * L, n_centers if u.n == 1 else 3)
    if u.n == 1:
        centers = tuple((float(t),) for t in line)
    else:
        centers = tuple((float(a), float(b)) for a in line for b in line)
    rhos = [L / 8 * 2.0**-j for j in range(n_radii)]
    vals = np.asarray(u.values).ravel()
    q = np.quantile(vals, np.linspace(0, 1, n_quantiles))
    levels = np.unique(np.concatenate([q, [vals.min() - 1, vals.max() + 1]]))
    return SamplingPlan(centers, tuple((r, 2 * r) for r in rhos), tuple(float(k) for k in levels), tuple(signs))


@dataclass(frozen=True)
class TrendProbe:
    sign: str
    x0: tuple
    r: float
    R: float
    levels: tuple
    ratios: tuple

    @property
    def quotients(self) -> tuple:
        """Ratio at each halved level divided by the ratio at the previous one."""
        out = []
        for a, b in zip(self.ratios, self.ratios[1:]):
            out.append(b / a if a > 0 else (math.inf if b > 0 else 0.0))
        return tuple(out)

    def increasing_by(self, factor: float) -> bool:
        q = self.quotients
        return bool(q) and all(t >= factor for t in q)

    def to_dict(self) -> dict:
        return {
            "sign": self.sign, "x0": list(self.x0), "r": self.r, "R": self.R,
            "levels": list(self.levels), "ratios": list(self.ratios), "quotients": list(self.quotients),
        }


def trend_probe(
    u: GridFunction,
    params: FracParams,
    dg: DGParams,
    sign: str,
    mode: str,
    *,
    x0=None,
    r: float | None = None,
    R: float | None = None,
    halvings: int = 3,
    start_fraction: float = 0.2,
    **kw,
) -> TrendProbe | None:
    """Follow the inequality ratio as ``k`` approaches the extreme value on ``B_r``.

    Levels are ``k_ref ± start_fraction * osc * 2^-j`` for ``j = 0..halvings``,
    with ``k_ref`` the infimum (sign '-') or supremum (sign '+') on ``B_r`` and
    ``osc`` the oscillation on ``B_R``.  Defaults: centre of the box, ``r`` a
    quarter of the distance to the boundary, ``R = 2r``.  Returns ``None`` when
    ``u`` is flat on ``B_R``.
    """
    if x0 is None:
        x0 = (0.5 * (u.a + u.b),) * u.n
    x0 = tuple(np.atleast_1d(np.asarray(x0, dtype=float)))
    if r is None:
        r = u.dist_to_boundary(x0) / 4
    if R is None:
        R = 2 * r
    hi_r, lo_r = sup_inf_on_ball(u, Ball(x0, r))
    hi_R, lo_R = sup_inf_on_ball(u, Ball(x0, R))
    osc = hi_R - lo_R
    if osc <= 0:
        return None
    steps = [start_fraction * osc * 2.0**-j for j in range(halvings + 1)]
    levels = [lo_r + t for t in steps] if sign == "-" else [hi_r - t for t in steps]
    ratios = [dg_sides(u, params, dg, x0, r, R, k, sign, mode, **kw).ratio for k in levels]
    return TrendProbe(sign, x0, float(r), float(R), tuple(levels), tuple(ratios))


@dataclass
class CertificateReport:
    samples: list
    errors: list
    minimal_H: float
    verdict: str
    trend: list = field(default_factory=list)
    mode: str = "weak"
    trend_factor: float = 1.5

    @property
    def worst(self) -> DGInequalityReport | None:
        if not self.samples:
            return None
        return max(self.samples, key=lambda t: t.ratio)

    def to_dict(self, include_samples: bool = False) -> dict:
        out = {
            "mode": self.mode,
            "verdict": self.verdict,
            "minimal_H": self.minimal_H,
            "max_ratio": max((t.ratio for t in self.samples), default=0.0),
            "n_samples": len(self.samples),
            "n_errors": len(self.errors),
            "errors": self.errors[:20],
            "trend_factor": self.trend_factor,
            "trend": [t.to_dict() for t in self.trend],
            "worst": self.worst.to_dict() if self.worst else None,
        }
        if include_samples:
            out["samples"] = [t.to_dict() for t in self.samples]
        return out


def certify(
    u: GridFunction,
    params: FracParams,
    d: float = 0.0,
    lam: float = 0.0,
    plan: SamplingPlan | None = None,
    *,
    mode: str = "weak",
    signs=SIGNS,
    trend_factor: float = 1.5,
    trend_halvings: int = 3,
    **kw,
) -> CertificateReport:
    """Sample the inequality over a plan and estimate the smallest workable H.

    ``minimal_H`` is the largest ratio over the plan, clamped below at 1.  The
    verdict is ``violated-trend`` only if, for some sign, the ratio grows by at
    least ``trend_factor`` at every halving of ``k - k_ref``.  A single sample
    never decides the verdict, since each one admits a finite H.
    """
    dg = DGParams(d=d, H=1.0, lam=lam)
    plan = plan or default_plan(u, signs)
    jobs = list(enumerate(plan.samples(u)))
    if not jobs:
        raise ValueError("sampling plan has no admissible (x0, r, R) combination")

    def run(job):
        idx, (c, r, R, k, sg) = job
        try:
            return idx, dg_sides(u, params, dg, c, r, R, k, sg, mode, **kw), None
        except (ValueError, SeminormDivergesError) as exc:
            return idx, None, f"sample {idx} (x0={c}, r={r}, R={R}, k={k}, sign={sg}): {exc}"

    results = sorted(pmap(run, jobs), key=lambda t: t[0])
    samples = [rep for _, rep, _ in results if rep is not None]
    errors = [err for _, _, err in results if err is not None]
    ratios = [t.ratio for t in samples]
    minimal_H = max([1.0] + ratios)

    trend = []
    for sg in plan.signs:
        probe = trend_probe(u, params, dg, sg, mode, halvings=trend_halvings, **kw)
        if probe is not None:
            trend.append(probe)
    violated = any(t.increasing_by(trend_factor) for t in trend)
    return CertificateReport(samples, errors, minimal_H, "violated-trend" if violated else "certified",
                             trend, mode, trend_factor)


# ---------------------------------------------------------------------------
# closed forms for u = χ_(0,∞) in one dimension


@dataclass(frozen=True)
class AppendixOracle:
    s: float
    p: float
    x0: float
    r: float
    R: float
    k: float
    seminorm_term: float
    upper_bound: float
    rhs_lower_bound: float
    cross_term: float
    wedge_lower_bound: float

    def to_dict(self) -> dict:
        return asdict(self)


def appendix_oracle(s: float, p: float, x0: float, r: float, R: float, k: float) -> AppendixOracle:
    """Exact values for the step function ``χ_(0,∞)`` at level ``k`` with sign '-'.

    * ``seminorm_term``: ``[(χ - k)_-]^p`` over ``B_r(x0)``, the exact double integral.
    * ``upper_bound``: ``2 (r - |x0|)_+^(1-sp) k^p / (sp (1 - sp))``.
    * ``rhs_lower_bound``: ``(R - |x0|)^(1-sp) k^p`` (H = 1).
    * ``cross_term``: the exact strong-mode cross term on ``B_r(x0)``.
    * ``wedge_lower_bound``: ``r^(1-sp) k (1-k)^(p-1) / (1-sp)``.
    """
    params = FracParams(1, s, p)
    a = params.sp
    if a >= 1:
        raise ValueError(f"closed forms need s*p < 1, got {a}")
    if not (0 < k <= 1):
        raise ValueError(f"k must lie in (0, 1], got {k}")
    if not (0 < r < R):
        raise ValueError(f"need 0 < r < R, got r={r}, R={R}")
    c = a * (1 - a)
    left, right = r + x0, r - x0  # lengths of B_r(x0) on each side of 0
    if left > 0 and right > 0:
        semi = 2 * k**p * (left ** (1 - a) + right ** (1 - a) - (left + right) ** (1 - a)) / c
    else:
        semi = 0.0
    upper = 2 * max(r - abs(x0), 0.0) ** (1 - a) * k**p / c
    rhs_low = max(R - abs(x0), 0.0) ** (1 - a) * k**p
    # cross: int over x in B_r(x0), x < 0, of k (1-k)^(p-1) |x|^(-sp) / (sp)
    t_hi, t_lo = max(r - x0, 0.0), max(-x0 - r, 0.0)
    cross = k * (1 - k) ** (p - 1) * (t_hi ** (1 - a) - t_lo ** (1 - a)) / c
    wedge = r ** (1 - a) * k * (1 - k) ** (p - 1) / (1 - a)
    return AppendixOracle(s, p, x0, r, R, k, semi, upper, rhs_low, cross, wedge)


def step_function(cells: int) -> GridFunction:
    """``χ_(0,∞)`` on (-1, 1) with the same step continued outside."""
    from .gridfn import build_grid_function

    return build_grid_function({"family": "step", "box": {"a": -1.0, "b": 1.0}, "cells": int(cells),
                                "exterior": "extend"})


def appendix_reproduction(s: float = 0.25, p: float = 2.0, cells=(512, 1024, 2048, 4096),
                          stability_factor: float = 2.0, trend_threshold: float = 1.8) -> dict:
    """Closed forms against quadrature, and both certificates, for the step function.

    The weak certificate is computed on every grid in ``cells`` and must keep
    ``minimal_H`` within ``stability_factor``; the strong trend probe runs on
    the finest grid and must grow by ``trend_threshold`` per halving of ``k``.
    """
    params = FracParams(1, s, p)
    fine = step_function(max(cells))
    comparisons = []
    for x0, r, R, k in ((0.0, 0.5, 0.75, 0.5), (0.1, 0.4, 0.6, 0.3), (0.0, 0.25, 0.5, 0.1), (-0.6, 0.2, 0.3, 0.5)):
        o = appendix_oracle(s, p, x0, r, R, k)
        rep = dg_sides(fine, params, DGParams(), (x0,), r, R, k, "-", "strong")
        rel = abs(rep.lhs_seminorm - o.seminorm_term) / o.seminorm_term if o.seminorm_term else abs(rep.lhs_seminorm)
        rel_cross = abs(rep.lhs_cross - o.cross_term) / o.cross_term if o.cross_term else abs(rep.lhs_cross)
        comparisons.append({
            "x0": x0, "r": r, "R": R, "k": k, "oracle": o.to_dict(),
            "seminorm": rep.lhs_seminorm, "seminorm_rel_err": rel,
            "cross": rep.lhs_cross, "cross_rel_err": rel_cross,
            "below_upper_bound": rep.lhs_seminorm <= o.upper_bound,
            "ok": rel <= 0.01 and rel_cross <= 0.01 and rep.lhs_seminorm <= o.upper_bound,
        })
    weak = {}
    for n in cells:
        cert = certify(step_function(n), params, mode="weak")
        weak[int(n)] = {"minimal_H": cert.minimal_H, "verdict": cert.verdict,
                        "max_ratio": max(t.ratio for t in cert.samples)}
    Hs = [v["minimal_H"] for v in weak.values()]
    stable = max(Hs) / min(Hs) <= stability_factor
    strong = certify(fine, params, mode="strong", signs=("-",))
    probe = strong.trend[0] if strong.trend else None
    quotients = list(probe.quotients) if probe else []
    trend_ok = bool(quotients) and all(q >= trend_threshold for q in quotients)
    weak_ok = all(v["verdict"] == "certified" for v in weak.values()) and stable
    passed = weak_ok and strong.verdict == "violated-trend" and trend_ok and all(c["ok"] for c in comparisons)
    return {
        "s": s, "p": p, "cells": [int(n) for n in cells],
        "comparisons": comparisons,
        "weak": {"certificates": weak, "stable": stable, "stability_factor": stability_factor,
                 "verdict": "certified" if weak_ok else "not-certified"},
        "strong": {"verdict": strong.verdict, "trend": probe.to_dict() if probe else None,
                   "trend_threshold": trend_threshold, "trend_ok": trend_ok},
        "passed": passed,
    }
