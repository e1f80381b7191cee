"""Empirical probes of the regularity theory of fractional De Giorgi classes.

None of these functions decides whether a theorem "holds": the theorems assert
the existence of constants, so each probe reports the quantities on both sides
and the constant they imply.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._workers import pmap
from .dgcert import DGParams
from .gridfn import Ball, FracParams, GridFunction, ball_weights, oscillation, sup_inf_on_ball, truncate
from .quadrature import gagliardo_seminorm, lp_norm_on_ball, tail


def _point(u: GridFunction, x0) -> tuple:
    x0 = tuple(float(t) for t in np.atleast_1d(np.asarray(x0, dtype=float)))
    if len(x0) != u.n:
        raise ValueError(f"x0 has {len(x0)} coordinates, expected {u.n}")
    return x0


def _check_radius(u: GridFunction, x0: tuple, R: float, factor: float):
    if not R > 0:
        raise ValueError(f"radius must be positive, got {R}")
    dist = u.dist_to_boundary(x0)
    if not factor * R < dist:
        raise ValueError(f"need {factor:g} R < dist(x0, boundary) = {dist:.6g}, got R = {R}")


def _data_term(params: FracParams, dg: DGParams, R: float) -> float:
    return R ** ((dg.lam + params.sp) / params.p) * dg.d


def _ball_measure(u: GridFunction, ball: Ball) -> float:
    return float(np.sum(ball_weights(u, ball)))


# ---------------------------------------------------------------------------
# local boundedness


@dataclass(frozen=True)
class LocalBoundReport:
    sup_abs: float
    mean_term: float
    tail_term: float
    data_term: float
    x0: tuple
    R: float

    @property
    def bracket(self) -> float:
        return self.mean_term + self.tail_term + self.data_term

    @property
    def ratio(self) -> float:
        """``sup |u| / bracket``: the smallest constant the estimate needs here (0 when both vanish)."""
        if self.sup_abs == 0:
            return 0.0
        return self.sup_abs / self.bracket if self.bracket > 0 else math.inf

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(x0=list(self.x0), bracket=self.bracket, ratio=self.ratio)
        return out


def local_bound_estimate(u: GridFunction, params: FracParams, dg: DGParams, x0, R: float) -> LocalBoundReport:
    """``sup_{B_R} |u|`` against ``(avg_{B_2R} |u|^p)^(1/p) + Tail(u; x0, R) + R^((λ+sp)/p) d``."""
    x0 = _point(u, x0)
    _check_radius(u, x0, R, 2.0)
    hi, lo = sup_inf_on_ball(u, Ball(x0, R))
    big = Ball(x0, 2 * R)
    mean = (lp_norm_on_ball(u, big, params.p) / _ball_measure(u, big)) ** (1.0 / params.p)
    t = tail(u, params, x0, R).tail
    return LocalBoundReport(max(abs(hi), abs(lo)), mean, t, _data_term(params, dg, R), x0, float(R))


# ---------------------------------------------------------------------------
# Hölder exponent


@dataclass(frozen=True)
class HolderFit:
    alpha: float
    C: float
    residual: float
    scales: tuple
    oscillations: tuple
    flat: bool = False

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(scales=list(self.scales), oscillations=list(self.oscillations))
        return out


def holder_fit(u: GridFunction, x0, R_max: float, n_scales: int = 6) -> HolderFit:
    """Fit ``osc(u, B_r(x0)) ~ C r^α`` over the dyadic radii ``R_max 2^-j``.

    Least squares in log-log coordinates; α is clamped to ``[0, 1]``.  If every
    oscillation vanishes the fit is flagged flat with α = 0.
    """
    if n_scales < 4:
        raise ValueError("a Hölder fit needs at least 4 scales")
    x0 = _point(u, x0)
    _check_radius(u, x0, R_max, 1.0)
    scales = tuple(R_max * 2.0**-j for j in range(n_scales))
    osc = tuple(oscillation(u, Ball(x0, r)) for r in scales)
    pos = [(r, o) for r, o in zip(scales, osc) if o > 0]
    if not pos:
        return HolderFit(0.0, 0.0, 0.0, scales, osc, flat=True)
    if len(pos) < 2:
        # constant at all but the coarsest scale
        return HolderFit(1.0, pos[0][1] / pos[0][0], 0.0, scales, osc)
    lr = np.log([r for r, _ in pos])
    lo = np.log([o for _, o in pos])
    (slope, icpt), res, *_ = np.polyfit(lr, lo, 1, full=True)
    resid = float(res[0]) if len(res) else 0.0
    return HolderFit(float(min(max(slope, 0.0), 1.0)), float(math.exp(icpt)), resid, scales, osc)


# ---------------------------------------------------------------------------
# Harnack quotients


@dataclass(frozen=True)
class HarnackReport:
    sup_u: float
    inf_u: float
    tail_plus: float
    tail_minus: float
    data_term: float
    weak_mean: float
    eps: float
    x0: tuple
    R: float

    @property
    def sup_term(self) -> float:
        return self.sup_u + self.tail_plus

    @property
    def inf_term(self) -> float:
        return self.inf_u + self.tail_minus + self.data_term

    @property
    def quotient(self) -> float:
        """``(sup + Tail(u_+)) / (inf + Tail(u_-) + R^((λ+sp)/p) d)``."""
        return self.sup_term / self.inf_term if self.inf_term > 0 else math.inf

    @property
    def weak_quotient(self) -> float:
        return self.weak_mean / self.inf_term if self.inf_term > 0 else math.inf

    @property
    def tail_control_ratio(self) -> float:
        """``Tail(u_+) / (sup + Tail(u_-) + R^((λ+sp)/p) d)``."""
        den = self.sup_u + self.tail_minus + self.data_term
        if self.tail_plus == 0:
            return 0.0
        return self.tail_plus / den if den > 0 else math.inf

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(x0=list(self.x0), sup_term=self.sup_term, inf_term=self.inf_term, quotient=self.quotient,
                   weak_quotient=self.weak_quotient, tail_control_ratio=self.tail_control_ratio)
        return out


def harnack_report(u: GridFunction, params: FracParams, dg: DGParams, x0, R: float, eps: float = 0.5) -> HarnackReport:
    """Every term of the Harnack and weak Harnack inequalities on ``B_R(x0)``.

    The tails are taken at radius ``R`` as in the displayed inequalities.  ``u``
    must be nonnegative on the grid.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    x0 = _point(u, x0)
    _check_radius(u, x0, R, 2.0)
    if np.any(np.asarray(u.values) < 0):
        raise ValueError("u must be nonnegative in the domain")
    ball = Ball(x0, R)
    hi, lo = sup_inf_on_ball(u, ball)
    tp = tail(truncate(u, 0.0, "+"), params, x0, R).tail
    tm = tail(truncate(u, 0.0, "-"), params, x0, R).tail
    w = ball_weights(u, ball)
    mean = (float(np.sum(w * np.asarray(u.values) ** eps)) / float(np.sum(w))) ** (1.0 / eps)
    return HarnackReport(hi, lo, tp, tm, _data_term(params, dg, R), mean, float(eps), x0, float(R))


# ---------------------------------------------------------------------------
# growth lemma


@dataclass(frozen=True)
class GrowthRecord:
    nonnegative: bool
    density: float
    smallness: float
    inf_u: float
    low_density: dict = field(default_factory=dict)
    R: float = 0.0
    x0: tuple = ()

    def to_dict(self) -> dict:
        out = asdict(self)
        out["x0"] = list(self.x0)
        out["low_density"] = {repr(k): v for k, v in self.low_density.items()}
        return out


def growth_probe(u: GridFunction, params: FracParams, dg: DGParams, R: float, x0=None,
                 deltas=(1 / 8, 1 / 16, 1 / 32, 1 / 64)) -> GrowthRecord:
    """Hypotheses and conclusion of the growth lemma on ``B_R(x0)``.

    Reports nonnegativity on ``B_4R``, the density of ``{u >= 1}`` in ``B_2R``,
    the smallness quantity ``R^((λ+sp)/p) d + Tail(u_-; x0, 4R)``, the infimum
    on ``B_R`` and, for each candidate δ, the density of ``{u < 2δ}`` in ``B_2R``.
    """
    x0 = _point(u, (0.5 * (u.a + u.b),) * u.n if x0 is None else x0)
    _check_radius(u, x0, R, 4.0)
    vals = np.asarray(u.values)
    w4 = ball_weights(u, Ball(x0, 4 * R))
    nonneg = bool(np.all(vals[w4 > 0] >= 0))
    w2 = ball_weights(u, Ball(x0, 2 * R))
    total = float(np.sum(w2))
    density = float(np.sum(w2[vals >= 1.0])) / total
    small = _data_term(params, dg, R) + tail(truncate(u, 0.0, "-"), params, x0, 4 * R).tail
    _, lo = sup_inf_on_ball(u, Ball(x0, R))
    low = {float(dl): float(np.sum(w2[vals < 2 * dl])) / total for dl in deltas}
    return GrowthRecord(nonneg, density, small, lo, low, float(R), x0)


# ---------------------------------------------------------------------------
# the numerical lemma behind De Giorgi's iteration


@dataclass(frozen=True)
class IterationTrace:
    phi: tuple
    C: float
    b: float
    eps: float
    threshold: float
    verdict: str
    blow_up_index: int | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["phi"] = list(self.phi)
        return out


_LOG_VANISH = math.log(1e-30)
_LOG_MAX = math.log(np.finfo(float).max)


def iteration_threshold(C: float, b: float, eps: float) -> float:
    """``φ0* = C^(-1/ε) b^(-1/ε^2)``: below it the recursion is driven to zero."""
    return math.exp(-math.log(C) / eps - math.log(b) / eps**2)


def iterate_lemma(phi0: float, C: float, b: float, eps: float, budget: int = 1000) -> IterationTrace:
    """Run ``φ_{i+1} = C b^i φ_i^(1+ε)`` in log space.

    ``vanishes`` means the sequence decreased monotonically below 1e-30 within
    the budget; anything else (growth, overflow, budget exhausted) ``stalls``.
    """
    if not (C > 0 and b > 0 and eps > 0 and phi0 >= 0 and budget >= 1):
        raise ValueError("iterate_lemma needs C, b, eps > 0, phi0 >= 0 and a positive budget")
    thr = iteration_threshold(C, b, eps)
    if phi0 == 0:
        return IterationTrace((0.0,), C, b, eps, thr, "vanishes")
    lc, lb = math.log(C), math.log(b)
    lphi = math.log(phi0)
    logs = [lphi]
    verdict, blow = "stalls", None
    for i in range(budget):
        nxt = lc + i * lb + (1.0 + eps) * lphi
        if nxt > _LOG_MAX:
            blow = i + 1
            break
        if nxt >= lphi:
            logs.append(nxt)
            break
        logs.append(nxt)
        lphi = nxt
        if lphi < _LOG_VANISH:
            verdict = "vanishes"
            break
    phi = tuple(math.exp(t) for t in logs)
    return IterationTrace(phi, C, b, eps, thr, verdict, blow)


# ---------------------------------------------------------------------------
# isoperimetric-type inequality for level sets


@dataclass(frozen=True)
class IsoperimetricReport:
    s: float
    p: float
    measure_low: float
    measure_high: float
    measure_mid: float
    seminorm_p: float
    lhs: float
    rhs_factor: float
    M: float
    gamma: float

    @property
    def ratio(self) -> float:
        if self.lhs == 0:
            return 0.0
        return self.lhs / self.rhs_factor if self.rhs_factor > 0 else math.inf

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ratio"] = self.ratio
        return out


def isoperimetric_check(u: GridFunction, s: float, p: float, *, seminorm_mode: str | None = None) -> IsoperimetricReport:
    """Both sides of the level-set inequality on the unit ball ``B_1`` of the plane.

    ``lhs = (|{u <= 0}| |{u >= 1}|)^((n-1)/n)`` and
    ``rhs_factor = (1 - s)^(1/p) [u]_{W^{s,p}(B_1)} |{0 < u < 1}|^((p-1)/p)``,
    all sets intersected with ``B_1``.  Also reports ``M`` and ``γ`` of the
    quantitative hypotheses.
    """
    if u.n != 2:
        raise ValueError("the isoperimetric check runs on two-dimensional grids")
    params = FracParams(2, s, p)
    ball = Ball((0.0, 0.0), 1.0)
    if u.a > -1 or u.b < 1:
        raise ValueError("the grid must contain the unit ball")
    w = ball_weights(u, ball)
    vals = np.asarray(u.values)
    low = float(np.sum(w[vals <= 0]))
    high = float(np.sum(w[vals >= 1]))
    mid = float(np.sum(w[(vals > 0) & (vals < 1)]))
    semi = gagliardo_seminorm(u, ball, params, mode=seminorm_mode)
    n = 2
    lhs = (low * high) ** ((n - 1) / n)
    rhs = (1 - s) ** (1 / p) * semi ** (1 / p) * mid ** ((p - 1) / p)
    M = lp_norm_on_ball(u, ball, p) + (1 - s) * semi
    gamma = min(low, high) / float(np.sum(w))
    return IsoperimetricReport(s, p, low, high, mid, semi, lhs, rhs, M, gamma)


@dataclass(frozen=True)
class IsoperimetricScan:
    s_values: tuple
    max_ratio: tuple
    C: float | None
    s_bar: float | None
    reports: tuple = ()

    def to_dict(self) -> dict:
        return {"s_values": list(self.s_values), "max_ratio": list(self.max_ratio), "C": self.C,
                "s_bar": self.s_bar, "reports": [r.to_dict() for r in self.reports]}


def isoperimetric_scan(corpus, s_values, p: float, C: float | None = None, **kw) -> IsoperimetricScan:
    """Largest ratio over a corpus for each ``s``; with a candidate ``C``, the
    smallest grid value ``s̄`` such that the ratio stays below ``C`` for all
    grid values ``s >= s̄``."""
    s_values = tuple(sorted(float(t) for t in s_values))
    jobs = [(u, s) for s in s_values for u in corpus]
    reports = pmap(lambda job: isoperimetric_check(job[0], job[1], p, **kw), jobs)
    m = len(corpus)
    max_ratio = tuple(max(r.ratio for r in reports[i * m:(i + 1) * m]) for i in range(len(s_values)))
    s_bar = None
    if C is not None:
        for s, r in zip(reversed(s_values), reversed(max_ratio)):
            if r > C:
                break
            s_bar = s
    return IsoperimetricScan(s_values, max_ratio, C, s_bar, tuple(reports))


def circular_segment_area(c: float) -> float:
    """Area of ``{x in B_1 : x_1 >= c}`` for ``|c| <= 1``."""
    c = min(max(c, -1.0), 1.0)
    return math.acos(c) - c * math.sqrt(1 - c * c)
