"""The nonlocal p-Laplacian type operator: principal values, weak residuals, solves.

    L u(x) = PV ∫ |u(x) - u(y)|^(p-2) (u(x) - u(y)) K(x, y) dy

Weak (super/sub)solutions of ``L u = f`` in Ω are tested with functions
supported in Ω.  On the grid the test functions are cell indicators (or
three-cell hats in 1D), and the weak form of cell ``i`` reads

    r_i = sum_j |u_i - u_j|^(p-2) (u_i - u_j) W_ij + sum_k |u_i - g_k|^(p-2) (u_i - g_k) V_ik - h f_i.

With the sign convention used here, ``u`` is a supersolution when
``r . φ <= 0`` for every nonnegative φ and a subsolution when ``r . φ >= 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .energy import MinimizeResult, Potential, SolveConfig, minimize
from .gridfn import ExteriorSpec, GridFunction, SpecError, build_grid_function
from .quadrature import KernelSpec, KernelWeights, interval_point_integral, kernel_weights


@dataclass(frozen=True)
class RightHandSide:
    """Bounded source ``f`` given by its cell values, with declared bound ``f0``."""

    values: np.ndarray
    f0: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("right-hand side has non-finite values")
        if not (math.isfinite(self.f0) and self.f0 >= 0):
            raise ValueError(f"f0 must be finite and >= 0, got {self.f0}")
        if np.max(np.abs(vals), initial=0.0) > self.f0 * (1 + 1e-12):
            raise ValueError(f"declared bound f0 = {self.f0} is below sup |f| = {np.max(np.abs(vals))}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_spec(cls, doc: Mapping[str, Any], f0: float | None = None) -> "RightHandSide":
        """Build ``f`` from a function-spec document (its exterior is ignored)."""
        fn = build_grid_function(dict(doc))
        vals = np.asarray(fn.values, dtype=float)
        bound = float(np.max(np.abs(vals), initial=0.0)) if f0 is None else float(f0)
        return cls(vals, bound)

    @classmethod
    def preset(cls, name: str, a: float, b: float, cells: int, scale: float = 1.0) -> "RightHandSide":
        """``zero``, ``constant`` (f = scale) or ``ramp`` (f = scale * x / max|x|)."""
        x = a + (np.arange(cells) + 0.5) * (b - a) / cells
        if name == "zero":
            vals = np.zeros(cells)
        elif name == "constant":
            vals = np.full(cells, float(scale))
        elif name == "ramp":
            vals = scale * x / max(abs(a), abs(b))
        else:
            raise SpecError(f"unknown right-hand side preset {name!r}")
        return cls(vals, float(np.max(np.abs(vals), initial=0.0)))


# ---------------------------------------------------------------------------
# principal value


@dataclass(frozen=True)
class PVResult:
    value: float
    deltas: tuple
    truncations: tuple
    order: float | None
    converged: bool
    message: str = ""

    def trace_csv(self) -> str:
        rows = ["delta,truncated_integral"] + [f"{d!r},{v!r}" for d, v in zip(self.deltas, self.truncations)]
        return "\n".join(rows) + "\n"

    def to_dict(self) -> dict:
        return {"value": self.value, "order": self.order, "converged": self.converged, "message": self.message,
                "deltas": list(self.deltas), "truncations": list(self.truncations)}


def _truncated(u: GridFunction, x: float, delta: float, kernel: KernelSpec) -> float:
    p, alpha = kernel.params.p, kernel.params.sp
    gam = -1.0 - alpha
    ux = u.evaluate((x,))
    e = u.edges
    pieces = [(e[i], e[i + 1], v) for i, v in enumerate(np.asarray(u.values))]
    pieces += list(u.exterior_partition())
    total = 0.0
    for lo, hi, v in pieces:
        d = ux - v
        if d == 0.0:
            continue
        flux = abs(d) ** (p - 2.0) * d
        w = 0.0
        # the piece minus (x - delta, x + delta), split into the parts left and right of x
        for a, b in ((lo, min(hi, x - delta)), (max(lo, x + delta), hi)):
            if b > a:
                w += float(interval_point_integral(x, a, b, gam))
        if w == 0.0:
            continue
        if kernel.multiplier is not None:
            anchor = 0.5 * (lo + hi) if math.isfinite(lo) and math.isfinite(hi) else (hi if hi <= u.a else lo)
            w *= float(kernel.m(np.asarray(x), np.asarray(anchor)))
        total += flux * w
    return total


def apply_pv(u: GridFunction, x: float, kernel: KernelSpec, delta_min: float | None = None) -> PVResult:
    """``L u(x)`` as the limit of truncated integrals over ``R \\ B_δ(x)``.

    ``δ`` is halved from ``h`` down to ``delta_min`` (default ``h / 16``).  The
    limit is Richardson-extrapolated from the last three truncations, with the
    order read off the trace; a trace whose increments do not shrink is flagged.
    """
    if u.n != 1:
        raise NotImplementedError("principal values are evaluated on 1D grids")
    x = float(np.atleast_1d(x)[0])
    h = u.h
    delta_min = h / 16 if delta_min is None else float(delta_min)
    if not 0 < delta_min <= h:
        raise ValueError("delta_min must lie in (0, h]")
    deltas = [h]
    while deltas[-1] / 2 >= delta_min * (1 - 1e-12):
        deltas.append(deltas[-1] / 2)
    vals = [_truncated(u, x, d, kernel) for d in deltas]
    order, value, converged, msg = None, vals[-1], True, "exact: trace is constant"
    if len(vals) >= 3:
        d1, d2 = vals[-2] - vals[-3], vals[-1] - vals[-2]
        scale = max(abs(v) for v in vals) + 1e-300
        if abs(d2) <= 1e-14 * scale:
            value = vals[-1]
            msg = "settled: last truncations agree" if abs(vals[-1] - vals[0]) > 1e-14 * scale else msg
        elif abs(d1) > abs(d2) and d1 * d2 > 0:
            ratio = d1 / d2
            order = math.log2(ratio)
            value = vals[-1] + d2 / (ratio - 1.0)
            msg = "extrapolated"
        else:
            converged, msg = False, "truncated integrals do not settle"
    return PVResult(float(value), tuple(deltas), tuple(vals), order, converged, msg)


# ---------------------------------------------------------------------------
# weak residual


@dataclass(frozen=True)
class ResidualReport:
    residuals: np.ndarray
    h: float
    test: str

    @property
    def max_abs(self) -> float:
        """``max |r_i| / h``, the residual as a density."""
        return float(np.max(np.abs(self.residuals), initial=0.0)) / self.h

    def supersolution(self, tol: float) -> bool:
        """Nonnegative tests: ``r_i / h <= tol`` for all i."""
        return bool(np.all(self.residuals / self.h <= tol))

    def subsolution(self, tol: float) -> bool:
        """Nonnegative tests: ``r_i / h >= -tol`` for all i."""
        return bool(np.all(self.residuals / self.h >= -tol))

    def to_dict(self) -> dict:
        return {"test": self.test, "max_abs": self.max_abs, "residuals_over_h": list(self.residuals / self.h)}


def _flux(d, p):
    if p == 2:
        return d
    # |d|^(p-2) d vanishes at d = 0 for every p > 1; avoid 0^(p-2) when p < 2
    mag = np.abs(d)
    return np.where(mag > 0, np.power(mag, p - 2.0, where=mag > 0, out=np.ones_like(mag)) * d, 0.0)


def weak_residual(u: GridFunction, kernel: KernelSpec, rhs: RightHandSide | None = None,
                  *, test: str = "indicator", weights: KernelWeights | None = None) -> ResidualReport:
    """Weak residual of ``L u = f`` against cell-indicator (or hat) test functions.

    ``test='hat'`` pairs with the piecewise-constant sampling ``(1/2, 1, 1/2)``
    of the hat function centred on each interior cell.
    """
    kw = weights or kernel_weights(u, kernel)
    p = kernel.params.p
    vals = np.asarray(u.values, dtype=float)
    f = np.zeros(u.cells) if rhs is None else np.asarray(rhs.values, dtype=float)
    r = np.sum(_flux(vals[:, None] - vals[None, :], p) * kw.W, axis=1)
    r += np.sum(_flux(vals[:, None] - kw.g[None, :], p) * kw.V, axis=1)
    r -= u.h * f
    if test == "hat":
        r = 0.5 * r[:-2] + r[1:-1] + 0.5 * r[2:]
    elif test != "indicator":
        raise ValueError(f"unknown test family {test!r}")
    return ResidualReport(r, u.h, test)


# ---------------------------------------------------------------------------
# solve


@dataclass
class SolveResult:
    u: GridFunction
    descent: MinimizeResult
    residual: ResidualReport
    residual_tol: float

    @property
    def ok(self) -> bool:
        return self.descent.converged and self.residual.max_abs <= self.residual_tol


def solve(
    rhs: RightHandSide,
    exterior: ExteriorSpec,
    kernel: KernelSpec,
    config: SolveConfig | None = None,
    *,
    box: tuple[float, float] = (-1.0, 1.0),
    cells: int | None = None,
    u0: GridFunction | None = None,
    residual_tol: float | None = None,
) -> SolveResult:
    """Weak solution of ``L u = f`` in the box with ``u = exterior`` outside.

    Minimises ``E(u) - ∫ f u`` (no potential) by coordinate descent; the first
    variation of that functional is the weak form.  ``residual_tol`` defaults
    to ``1e-5 * max(1, f0, max|exterior|)``.
    """
    config = config or SolveConfig()
    cells = cells or rhs.values.shape[0]
    if rhs.values.shape[0] != cells:
        raise ValueError("right-hand side length does not match the grid")
    if u0 is None:
        start = np.full(cells, exterior.at_infinity, dtype=float)
        u0 = GridFunction(box[0], box[1], cells, start, exterior, 1, False, "nodal")
    kw = kernel_weights(u0, kernel)
    res = minimize(u0, kernel, Potential.zero(), config, source=rhs.values, weights=kw)
    report = weak_residual(res.u, kernel, rhs, weights=kw)
    tol = residual_tol if residual_tol is not None else 1e-5 * max(1.0, rhs.f0, exterior.max_abs())
    return SolveResult(res.u, res, report, tol)


def linear_oracle(u_template: GridFunction, kernel: KernelSpec, f: np.ndarray | None = None) -> np.ndarray:
    """Direct solve of the p = 2 normal equations ``(diag(W1 + V1) - W) u = V g + h f``."""
    if kernel.params.p != 2:
        raise ValueError("the linear oracle needs p = 2")
    kw = kernel_weights(u_template, kernel)
    A = np.diag(kw.W.sum(axis=1) + kw.V.sum(axis=1)) - kw.W
    b = kw.V @ kw.g
    if f is not None:
        b = b + u_template.h * np.asarray(f, dtype=float)
    return np.linalg.solve(A, b)
