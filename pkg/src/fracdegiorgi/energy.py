"""Nonlocal energy with fixed exterior data and its coordinate-descent minimization.

On a 1D grid with cell values ``u_i``, exterior pieces of value ``g_k`` and
kernel weights ``W`` (cell-cell) and ``V`` (cell-exterior),

    E(u) = 1/(2p) [ sum_{i != j} |u_i - u_j|^p W_ij + 2 sum_{i,k} |u_i - g_k|^p V_ik ]
           + h sum_i F(x_i, u_i).

The pairs with both points outside the box are excluded, as in the definition
of the energy on ``R^2n minus (R^n minus Omega)^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numba import njit

from .gridfn import GridFunction
from .quadrature import KernelSpec, KernelWeights, interval_pair_integral, kernel_weights

# potential kinds understood by the compiled line search
_ZERO, _INDICATOR, _DOUBLE_WELL, _TABLE, _CALLABLE = range(5)


@dataclass(frozen=True)
class Potential:
    """Bounded potential ``F(x, u)`` with declared bound ``F0``.

    Use the constructors: :meth:`zero`, :meth:`indicator` (``F0 χ_(0,∞)(u)``),
    :meth:`double_well` (``F0 min(|1 - u^2|, 1)^δ``), :meth:`tabulated`
    (piecewise linear in ``u``), :meth:`smooth` (callables for ``F`` and
    ``∂F/∂u``).  The bound is checked on a sampling lattice at construction.
    """

    form: str
    F0: float = 0.0
    delta: float = 1.0
    table_u: tuple = ()
    table_F: tuple = ()
    value_fn: Callable | None = None
    deriv_fn: Callable | None = None

    def __post_init__(self):
        if not (math.isfinite(self.F0) and self.F0 >= 0):
            raise ValueError(f"F0 must be finite and >= 0, got {self.F0}")
        if self.form not in ("zero", "indicator", "double_well", "tabulated", "smooth"):
            raise ValueError(f"unknown potential form {self.form!r}")
        if self.form == "double_well" and not self.delta > 0:
            raise ValueError("double-well exponent must be positive")
        if self.form == "tabulated":
            tu = np.asarray(self.table_u, dtype=float)
            if tu.ndim != 1 or tu.size < 2 or np.any(np.diff(tu) <= 0) or len(self.table_F) != tu.size:
                raise ValueError("tabulated potential needs increasing nodes and matching values")
        if self.form == "smooth" and self.value_fn is None:
            raise ValueError("smooth potential needs a value callable")
        xs = np.linspace(-2.0, 2.0, 9)
        us = np.linspace(-10.0, 10.0, 401)
        X, U = np.meshgrid(xs, us, indexing="ij")
        vals = self.value(X, U)
        if not np.all(np.isfinite(vals)) or np.max(np.abs(vals), initial=0.0) > self.F0 * (1 + 1e-12) + 1e-15:
            raise ValueError(f"potential exceeds its declared bound F0 = {self.F0} on the validation lattice")

    @classmethod
    def zero(cls) -> "Potential":
        return cls("zero")

    @classmethod
    def indicator(cls, F0: float = 1.0) -> "Potential":
        return cls("indicator", F0)

    @classmethod
    def double_well(cls, delta: float = 1.0, F0: float = 1.0) -> "Potential":
        return cls("double_well", F0, delta)

    @classmethod
    def tabulated(cls, u_nodes, F_values, F0: float | None = None) -> "Potential":
        F_values = tuple(float(v) for v in F_values)
        bound = max(abs(v) for v in F_values) if F0 is None else F0
        return cls("tabulated", bound, table_u=tuple(float(t) for t in u_nodes), table_F=F_values)

    @classmethod
    def smooth(cls, value_fn, deriv_fn=None, F0: float = 1.0) -> "Potential":
        return cls("smooth", F0, value_fn=value_fn, deriv_fn=deriv_fn)

    @classmethod
    def preset(cls, name: str, F0: float = 1.0, delta: float = 1.0) -> "Potential":
        if name == "zero":
            return cls.zero()
        if name == "indicator":
            return cls.indicator(F0)
        if name == "double_well":
            return cls.double_well(delta, F0)
        raise ValueError(f"unknown potential preset {name!r}")

    @property
    def kind(self) -> int:
        return {"zero": _ZERO, "indicator": _INDICATOR, "double_well": _DOUBLE_WELL,
                "tabulated": _TABLE, "smooth": _CALLABLE}[self.form]

    def value(self, x, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.form == "zero":
            return np.zeros_like(u)
        if self.form == "indicator":
            return np.where(u > 0, self.F0, 0.0)
        if self.form == "double_well":
            return self.F0 * np.minimum(np.abs(1.0 - u * u), 1.0) ** self.delta
        if self.form == "tabulated":
            return np.interp(u, self.table_u, self.table_F)
        return np.asarray(self.value_fn(np.broadcast_to(x, u.shape), u), dtype=float)

    def describe(self) -> dict:
        out = {"form": self.form, "F0": self.F0}
        if self.form == "double_well":
            out["delta"] = self.delta
        if self.form == "tabulated":
            out.update(table_u=list(self.table_u), table_F=list(self.table_F))
        return out


@dataclass(frozen=True)
class EnergyBreakdown:
    interaction_inside: float
    interaction_exterior: float
    potential: float
    quadrature_estimate: float

    @property
    def interaction(self) -> float:
        return self.interaction_inside + self.interaction_exterior

    @property
    def total(self) -> float:
        return self.interaction + self.potential

    def to_dict(self) -> dict:
        return {
            "interaction_inside": self.interaction_inside,
            "interaction_exterior": self.interaction_exterior,
            "interaction": self.interaction,
            "potential": self.potential,
            "total": self.total,
            "quadrature_estimate": self.quadrature_estimate,
        }


def _interaction_parts(vals: np.ndarray, kw: KernelWeights, p: float) -> tuple[float, float]:
    D = np.abs(vals[:, None] - vals[None, :]) ** p
    inside = float(np.sum(D * kw.W)) / (2 * p)
    outside = float(np.sum(np.abs(vals[:, None] - kw.g[None, :]) ** p * kw.V)) / p
    return inside, outside


def _multiplier_spread(u: GridFunction, kernel: KernelSpec, kw: KernelWeights) -> float:
    """Bound on the multiplier sampling error: interaction weighted by the spread of m over each cell pair."""
    if kernel.multiplier is None:
        return 0.0
    e, mids = u.edges, u.midpoints
    m_mid = kernel.m(mids[:, None], mids[None, :])
    spread = np.zeros_like(m_mid)
    for a in (e[:-1], e[1:]):
        for b in (e[:-1], e[1:]):
            spread = np.maximum(spread, np.abs(kernel.m(a[:, None], b[None, :]) - m_mid))
    p = kernel.params.p
    vals = np.asarray(u.values)
    W0 = kw.W / m_mid
    return float(np.sum(np.abs(vals[:, None] - vals[None, :]) ** p * W0 * spread)) / (2 * p)


def energy(u: GridFunction, kernel: KernelSpec, F: Potential | None = None,
           weights: KernelWeights | None = None) -> EnergyBreakdown:
    """``E(u; Ω)`` split into the in-in and in-out interactions and the potential.

    ``Ω`` is the box of ``u``.  The exterior of ``u`` supplies the data outside.
    """
    F = F or Potential.zero()
    kw = weights or kernel_weights(u, kernel)
    vals = np.asarray(u.values, dtype=float)
    inside, outside = _interaction_parts(vals, kw, kernel.params.p)
    pot = float(np.sum(F.value(u.midpoints, vals))) * u.h
    est = _multiplier_spread(u, kernel, kw) + 1e-15 * (abs(inside) + abs(outside))
    return EnergyBreakdown(inside, outside, pot, est)


def cell_exterior_weight(cell: tuple[float, float], piece: tuple[float, float], s: float, p: float) -> float:
    """Closed-form ``∫_cell ∫_piece |x - y|^(-1-sp)`` for the exact 1D kernel."""
    return float(interval_pair_integral(cell[0], cell[1], piece[0], piece[1], -1.0 - s * p))


# ---------------------------------------------------------------------------
# compiled coordinate objective


@njit(cache=True)
def _potential(t, kind, F0, delta, tu, tF):
    if kind == _INDICATOR:
        return F0 if t > 0.0 else 0.0
    if kind == _DOUBLE_WELL:
        a = abs(1.0 - t * t)
        return F0 * min(a, 1.0) ** delta
    if kind == _TABLE:
        return np.interp(t, tu, tF)
    return 0.0


@njit(cache=True)
def _dpotential(t, kind, F0, delta, tu, tF):
    if kind == _DOUBLE_WELL:
        a = 1.0 - t * t
        if abs(a) >= 1.0 or a == 0.0:
            return 0.0
        return F0 * delta * abs(a) ** (delta - 1.0) * (-2.0 * t) * (1.0 if a > 0 else -1.0)
    if kind == _TABLE:
        n = tu.shape[0]
        if t <= tu[0] or t >= tu[n - 1]:
            return 0.0
        j = np.searchsorted(tu, t) - 1
        return (tF[j + 1] - tF[j]) / (tu[j + 1] - tu[j])
    return 0.0


@njit(cache=True)
def _powp(d, p):
    if p == 2.0:
        return d * d
    return abs(d) ** p


@njit(cache=True)
def _phi(t, i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF):
    acc = 0.0
    N = u.shape[0]
    for j in range(N):
        if j != i:
            acc += _powp(t - u[j], p) * W[i, j]
    for k in range(g.shape[0]):
        acc += _powp(t - g[k], p) * V[i, k]
    return acc / p + h * (_potential(t, kind, F0, delta, tu, tF) - fi * t)


@njit(cache=True)
def _dphi(t, i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF):
    acc = 0.0
    N = u.shape[0]
    if p == 2.0:
        for j in range(N):
            if j != i:
                acc += (t - u[j]) * W[i, j]
        for k in range(g.shape[0]):
            acc += (t - g[k]) * V[i, k]
    else:
        for j in range(N):
            if j != i:
                d = t - u[j]
                if d != 0.0:
                    acc += abs(d) ** (p - 1.0) * (1.0 if d > 0 else -1.0) * W[i, j]
        for k in range(g.shape[0]):
            d = t - g[k]
            if d != 0.0:
                acc += abs(d) ** (p - 1.0) * (1.0 if d > 0 else -1.0) * V[i, k]
    return acc + h * (_dpotential(t, kind, F0, delta, tu, tF) - fi)


_GR = 0.5 * (math.sqrt(5.0) - 1.0)


@njit(cache=True)
def _golden(a, b, i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF, x_tol, max_probes):
    """Golden-section search on [a, b]; returns (t, value, final a, final b)."""
    c = b - _GR * (b - a)
    d = a + _GR * (b - a)
    fc = _phi(c, i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF)
    fd = _phi(d, i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF)
    probes = 2
    while b - a > x_tol and probes < max_probes:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GR * (b - a)
            fc = _phi(c, i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF)
        else:
            a, c, fc = c, d, fd
            d = a + _GR * (b - a)
            fd = _phi(d, i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF)
        probes += 1
    if fc <= fd:
        return c, fc, a, b
    return d, fd, a, b


@njit(cache=True)
def _polish(t, a, b, i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF, x_tol):
    """Illinois regula falsi on the derivative inside [a, b], if it changes sign there."""
    da = _dphi(a, i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF)
    db = _dphi(b, i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF)
    if not (da < 0.0 < db):
        return t
    side = 0
    m = t
    for _ in range(100):
        m = (a * db - b * da) / (db - da)
        if not (a < m < b):
            m = 0.5 * (a + b)
        dm = _dphi(m, i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF)
        if dm == 0.0:
            return m
        if dm < 0.0:
            a, da = m, dm
            if side == -1:
                db *= 0.5
            side = -1
        else:
            b, db = m, dm
            if side == 1:
                da *= 0.5
            side = 1
        if b - a <= x_tol or b - a <= 4e-16 * (abs(a) + abs(b)):
            break
    return m


@njit(cache=True)
def _best_in(lo, hi, i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF, breaks, x_tol, max_probes):
    """Best point of [lo, hi], searching each piece between breakpoints of F."""
    cuts = [lo]
    for z in breaks:
        if lo < z < hi:
            cuts.append(z)
    cuts.append(hi)
    best_t = lo
    best_f = np.inf
    for q in range(len(cuts) - 1):
        a = cuts[q]
        b = cuts[q + 1]
        if b - a <= 0.0:
            continue
        coarse = max(x_tol, 1e-4 * (b - a))
        t, f, aa, bb = _golden(a, b, i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF, coarse, max_probes)
        t2 = _polish(t, aa, bb, i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF, x_tol)
        f2 = _phi(t2, i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF)
        if f2 <= f:
            t, f = t2, f2
        # breakpoints are attained values too
        for e in (a, b):
            fe = _phi(e, i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF)
            if fe < f:
                t, f = e, fe
        if f < best_f:
            best_t, best_f = t, f
    return best_t, best_f


@njit(cache=True)
def _line_search(i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF, breaks, width, x_tol, max_probes):
    """Minimise the coordinate objective of cell i around u[i]; returns the new value (or u[i])."""
    ui = u[i]
    lo = ui - width
    hi = ui + width
    t, f = _best_in(lo, hi, i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF, breaks, x_tol, max_probes)
    # the best point sits on the outer edge: widen towards it and search again
    for _ in range(60):
        w = hi - lo
        if t <= lo:
            lo -= w
        elif t >= hi:
            hi += w
        else:
            break
        t, f = _best_in(lo, hi, i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF, breaks, x_tol, max_probes)
    if f < _phi(ui, i, u, W, V, g, p, h, fi, kind, F0, delta, tu, tF):
        return t
    return ui


@njit(cache=True)
def _sweep(u, order, W, V, g, p, h, f, kind, F0, delta, tu, tF, breaks, width, x_tol, max_probes):
    moved = 0.0
    for i in order:
        t = _line_search(i, u, W, V, g, p, h, f[i], kind, F0, delta, tu, tF, breaks, width, x_tol, max_probes)
        moved = max(moved, abs(t - u[i]))
        u[i] = t
    return moved


def _breakpoints(F: Potential) -> np.ndarray:
    if F.form == "indicator":
        return np.array([0.0])
    if F.form == "double_well":
        r2 = math.sqrt(2.0)
        return np.array([-r2, -1.0, 0.0, 1.0, r2])
    if F.form == "tabulated":
        return np.asarray(F.table_u, dtype=float)
    return np.empty(0)


def _python_line_search(i, u, kw, p, h, fi, F: Potential, x, width, x_tol, max_probes):
    """Line search for callable potentials: golden section on the full objective."""
    W, V, g = kw.W, kw.V, kw.g
    zero = np.empty(0)

    def phi(t):
        inter = _phi(t, i, u, W, V, g, p, h, fi, _ZERO, 0.0, 1.0, zero, zero)
        return inter + h * float(F.value(x, np.asarray(t)))

    def golden(a, b):
        c, d = b - _GR * (b - a), a + _GR * (b - a)
        fc, fd = phi(c), phi(d)
        for _ in range(max_probes):
            if b - a <= x_tol:
                break
            if fc <= fd:
                b, d, fd = d, c, fc
                c = b - _GR * (b - a)
                fc = phi(c)
            else:
                a, c, fc = c, d, fd
                d = a + _GR * (b - a)
                fd = phi(d)
        return (c, fc) if fc <= fd else (d, fd)

    lo, hi = u[i] - width, u[i] + width
    for _ in range(60):
        t, ft = golden(lo, hi)
        edge = 4 * x_tol + 1e-12 * (abs(lo) + abs(hi))
        if t - lo > edge and hi - t > edge:
            break
        if t - lo <= edge:
            lo -= hi - lo
        else:
            hi += hi - lo
    if F.deriv_fn is not None:
        def dphi(t):
            inter = _dphi(t, i, u, W, V, g, p, h, fi, _ZERO, 0.0, 1.0, zero, zero)
            return inter + h * float(F.deriv_fn(x, np.asarray(t)))
        a, b = t - 4 * x_tol, t + 4 * x_tol
        if dphi(a) < 0 < dphi(b):
            for _ in range(200):
                m = 0.5 * (a + b)
                if m <= a or m >= b:
                    break
                a, b = (m, b) if dphi(m) < 0 else (a, m)
            t2 = 0.5 * (a + b)
            if phi(t2) <= ft:
                t, ft = t2, phi(t2)
    return t if ft < phi(u[i]) else u[i]


# ---------------------------------------------------------------------------
# minimisation


@dataclass(frozen=True)
class SolveConfig:
    """Stopping rules and line-search settings for coordinate descent.

    ``bracket`` is the initial half-width of the golden-section bracket around
    the current value; later sweeps use a width adapted to the last moves.
    ``seed = None`` keeps the natural sweep order; an integer shuffles it.
    """

    tol_energy: float = 1e-13
    tol_step: float = 1e-10
    max_sweeps: int = 20000
    bracket: float = 1.0
    max_probes: int = 200
    x_tol: float = 1e-13
    seed: int | None = None

    def __post_init__(self):
        if not (self.tol_energy > 0 and self.tol_step > 0 and self.x_tol > 0 and self.bracket > 0):
            raise ValueError("tolerances and bracket width must be positive")
        if self.max_sweeps < 1 or self.max_probes < 4:
            raise ValueError("max_sweeps must be >= 1 and max_probes >= 4")


@dataclass
class MinimizeResult:
    u: GridFunction
    trace: list
    converged: bool
    sweeps: int
    last_move: float
    message: str = ""
    local_only: bool = False
    moves: list = field(default_factory=list)

    @property
    def final_energy(self) -> float:
        return self.trace[-1]

    def trace_csv(self) -> str:
        lines = ["sweep,objective,max_move"]
        for k, e in enumerate(self.trace):
            mv = self.moves[k] if k < len(self.moves) else ""
            lines.append(f"{k},{e!r},{mv!r}" if mv != "" else f"{k},{e!r},")
        return "\n".join(lines) + "\n"


def _objective(vals, kw, p, h, F: Potential, x, f) -> float:
    inside, outside = _interaction_parts(vals, kw, p)
    return inside + outside + h * float(np.sum(F.value(x, vals))) - h * float(vals @ f)


def minimize(
    u0: GridFunction,
    kernel: KernelSpec,
    F: Potential | None = None,
    config: SolveConfig | None = None,
    *,
    source: np.ndarray | None = None,
    weights: KernelWeights | None = None,
) -> MinimizeResult:
    """Cyclic coordinate descent on ``E(u) - h sum f_i u_i`` with the exterior of ``u0`` fixed.

    Each coordinate step minimises the objective in that cell's value alone,
    by golden-section search on the pieces between breakpoints of ``F``,
    refined by bisection on the derivative where it changes sign.  A step is
    kept only if it lowers the coordinate objective, so the recorded trace
    never increases.  Non-convex ``F`` yields a local minimiser
    (``local_only`` is set).
    """
    F = F or Potential.zero()
    config = config or SolveConfig()
    p = kernel.params.p
    kw = weights or kernel_weights(u0, kernel)
    h = u0.h
    x = u0.midpoints
    N = u0.cells
    f = np.zeros(N) if source is None else np.asarray(source, dtype=float).reshape(N)
    vals = np.array(u0.values, dtype=float)
    W = np.ascontiguousarray(kw.W)
    V = np.ascontiguousarray(kw.V)
    g = np.ascontiguousarray(kw.g, dtype=float)
    tu = np.asarray(F.table_u, dtype=float) if F.form == "tabulated" else np.zeros(1)
    tF = np.asarray(F.table_F, dtype=float) if F.form == "tabulated" else np.zeros(1)
    breaks = _breakpoints(F)
    rng = np.random.default_rng(config.seed) if config.seed is not None else None

    E = _objective(vals, kw, p, h, F, x, f)
    trace, moves = [E], []
    scale = max(np.max(np.abs(vals), initial=0.0), np.max(np.abs(g), initial=0.0), 1.0)
    width = config.bracket * scale
    converged, message, last_move = False, "max_sweeps exhausted", math.inf
    sweeps = 0
    for sweeps in range(1, config.max_sweeps + 1):
        order = np.arange(N) if rng is None else rng.permutation(N)
        prev = vals.copy()
        if F.form == "smooth":
            moved = 0.0
            for i in order:
                t = _python_line_search(i, vals, kw, p, h, f[i], F, x[i], width, config.x_tol, config.max_probes)
                moved = max(moved, abs(t - vals[i]))
                vals[i] = t
        else:
            moved = _sweep(vals, order, W, V, g, float(p), h, f, F.kind, float(F.F0), float(F.delta),
                           tu, tF, breaks, width, config.x_tol, config.max_probes)
        last_move = moved
        E_new = _objective(vals, kw, p, h, F, x, f)
        if E_new > E:
            # accepted moves each lowered their own coordinate objective, so a
            # rise here is summation roundoff: keep the previous iterate
            vals = prev
            converged = True
            message = "stopped at roundoff level"
            break
        trace.append(E_new)
        moves.append(moved)
        decrease = E - E_new
        E = E_new
        if decrease <= config.tol_energy * max(1.0, abs(E)) and moved <= config.tol_step * scale:
            converged, message = True, "converged"
            break
        width = max(8.0 * moved, 64.0 * config.x_tol * scale, 1e-9 * scale)
    u = u0.with_values(vals, continuous=False, family="nodal")
    return MinimizeResult(u, trace, converged, sweeps, last_move, message,
                          local_only=F.form in ("double_well", "tabulated", "smooth"), moves=moves)


# ---------------------------------------------------------------------------
# perturbation certificates


@dataclass(frozen=True)
class PerturbationReport:
    trials: int
    min_delta: dict
    worst_competitor: dict
    amplitude: float

    def passes(self, tol: float) -> dict:
        return {cls: v >= -tol for cls, v in self.min_delta.items()}

    def to_dict(self) -> dict:
        return {"trials": self.trials, "amplitude": self.amplitude, "min_delta": self.min_delta,
                "worst_competitor": self.worst_competitor}


def perturbation_check(
    u: GridFunction,
    kernel: KernelSpec,
    F: Potential | None = None,
    trials: int = 64,
    seed: int = 0,
    *,
    amplitude: float = 1e-3,
    source: np.ndarray | None = None,
) -> PerturbationReport:
    """Smallest energy change ``E(u + φ) - E(u)`` over random compactly supported φ.

    Competitors are single-cell bumps and smooth ``cos^2`` bumps over a few
    cells.  Three classes are reported: two-sided (any sign), nonnegative
    (superminimizer test) and nonpositive (subminimizer test).
    """
    F = F or Potential.zero()
    kw = kernel_weights(u, kernel)
    p, h, x, N = kernel.params.p, u.h, u.midpoints, u.cells
    f = np.zeros(N) if source is None else np.asarray(source, dtype=float)
    vals = np.asarray(u.values, dtype=float)
    base = _objective(vals, kw, p, h, F, x, f)
    rng = np.random.default_rng(seed)
    scale = amplitude * max(np.max(np.abs(vals), initial=0.0), 1.0)
    mins = {"two_sided": math.inf, "nonnegative": math.inf, "nonpositive": math.inf}
    worst = {}
    for t in range(trials):
        phi = np.zeros(N)
        if t % 2 == 0:
            phi[rng.integers(N)] = 1.0
            kind = "cell"
        else:
            c = rng.integers(N)
            w = int(rng.integers(2, max(3, N // 8)))
            idx = np.arange(max(0, c - w), min(N, c + w + 1))
            phi[idx] = np.cos(0.5 * np.pi * (idx - c) / (w + 1)) ** 2
            kind = "bump"
        mag = scale * rng.uniform(0.1, 1.0)
        for cls, sgn in (("nonnegative", 1.0), ("nonpositive", -1.0),
                         ("two_sided", 1.0 if rng.random() < 0.5 else -1.0)):
            delta = _objective(vals + sgn * mag * phi, kw, p, h, F, x, f) - base
            if delta < mins[cls]:
                mins[cls] = delta
                worst[cls] = {"trial": t, "kind": kind, "amplitude": float(sgn * mag)}
    return PerturbationReport(trials, mins, worst, amplitude)
