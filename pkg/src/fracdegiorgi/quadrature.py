"""Quadrature for nonlocal quantities of piecewise-constant grid functions.

In 1D every cell-pair integral of ``|x - y|^gamma`` is evaluated in closed form
from the second antiderivative ``t^(gamma+2) / ((gamma+1)(gamma+2))``, including
pairs that touch and pieces that extend to infinity.  In 2D the cell-pair
weights of a uniform grid depend only on the integer offset between the cells;
they are tabulated once per exponent, using polar coordinates around the
singular corner for touching cells and tensor Gauss-Legendre elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .gridfn import Ball, ExteriorSpec, FracParams, GridFunction, ball_weights, clip_to_interval, truncate

__all__ = [
    "SeminormDivergesError",
    "KernelSpec",
    "TailValue",
    "interval_pair_integral",
    "interval_point_integral",
    "gagliardo_seminorm",
    "weighted_norm",
    "tail",
    "cross_term",
    "kernel_weights",
    "KernelWeights",
    "lp_norm_on_ball",
    "offset_weight_table",
]

_CHUNK = 1 << 21  # pair-count budget per vectorised block


class SeminormDivergesError(ValueError):
    """The requested seminorm is +infinity for the given data (jump with s*p >= 1)."""


# ---------------------------------------------------------------------------
# 1D closed forms


def _g2(t, gam):
    """Second antiderivative of ``t^gam`` vanishing at 0 (``gam > -2``)."""
    return np.power(t, gam + 2.0) / ((gam + 1.0) * (gam + 2.0))


def interval_pair_integral(a1, b1, a2, b2, gam):
    """``int_{a1}^{b1} int_{a2}^{b2} |x - y|^gam dy dx`` for non-overlapping intervals.

    Intervals may touch (needs ``gam > -2``) and one of them may be unbounded
    (needs ``gam < -1``).  Broadcasts over array arguments.
    """
    a1, b1, a2, b2 = np.broadcast_arrays(*(np.asarray(t, dtype=float) for t in (a1, b1, a2, b2)))
    swap = a2 < a1
    l1 = np.where(swap, a2, a1)
    r1 = np.where(swap, b2, b1)
    l2 = np.where(swap, a1, a2)
    r2 = np.where(swap, b1, b2)
    inf_left = np.isinf(l1)
    inf_right = np.isinf(r2)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        out = _g2(l2 - r1, gam) - np.where(inf_left, 0.0, _g2(l2 - np.where(inf_left, 0.0, l1), gam))
        out = out - np.where(inf_right, 0.0, _g2(np.where(inf_right, 0.0, r2) - r1, gam))
        both = ~(inf_left | inf_right)
        out = out + np.where(both, _g2(np.where(both, r2 - l1, 0.0), gam), 0.0)
    return out


def interval_point_integral(x, c, d, gam):
    """``int_c^d |x - y|^gam dy`` for ``x`` outside ``(c, d)``; ``d`` may be ``+inf``, ``c`` may be ``-inf``."""
    x, c, d = np.broadcast_arrays(*(np.asarray(t, dtype=float) for t in (x, c, d)))

    def g1(t):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(np.isinf(t), 0.0, np.power(np.abs(t), gam + 1.0)) / (gam + 1.0)

    right = c >= x  # interval lies right of x
    return np.where(right, g1(d - x) - g1(c - x), g1(x - c) - g1(x - d))


# ---------------------------------------------------------------------------
# 2D offset tables

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _corner_rect(A, B, c, gam, n_ang=64):
    """``int_0^A int_0^B (c00 + c10 t1 + c01 t2 + c11 t1 t2) |t|^gam`` via polar coordinates."""
    x, w = _gl(n_ang)
    thc = math.atan2(B, A)
    total = 0.0
    for lo, hi, rfun in ((0.0, thc, lambda th: A / np.cos(th)), (thc, math.pi / 2, lambda th: B / np.sin(th))):
        th = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        wt = 0.5 * (hi - lo) * w
        R = rfun(th)
        co, si = np.cos(th), np.sin(th)
        acc = np.zeros_like(th)
        for (pa, pb), coef in zip(((0, 0), (1, 0), (0, 1), (1, 1)), c):
            if coef == 0.0:
                continue
            e = pa + pb + gam + 2.0
            acc += coef * R**e / e * co**pa * si**pb
        total += float(np.sum(wt * acc))
    return total


def _rect_gl(x0, x1, y0, y1, d, gam, n):
    x, w = _gl(n)
    t1 = 0.5 * (x1 - x0) * x + 0.5 * (x1 + x0)
    t2 = 0.5 * (y1 - y0) * x + 0.5 * (y1 + y0)
    T1, T2 = np.meshgrid(t1, t2, indexing="ij")
    W = np.outer(w, w) * 0.25 * (x1 - x0) * (y1 - y0)
    f = (1 - np.abs(T1 - d[0])) * (1 - np.abs(T2 - d[1])) * np.power(T1**2 + T2**2, 0.5 * gam)
    return float(np.sum(W * f))


def _unit_offset_integral(d1: int, d2: int, gam: float) -> float:
    """``int_{[0,1]^2} int_{[0,1]^2} |x - y + d|^gam`` written as a weighted integral over ``t = x - y + d``."""
    d = (float(d1), float(d2))
    cuts1 = sorted({d[0] - 1, d[0], d[0] + 1} | ({0.0} if abs(d[0]) < 1 else set()))
    cuts2 = sorted({d[1] - 1, d[1], d[1] + 1} | ({0.0} if abs(d[1]) < 1 else set()))
    near = max(abs(d1), abs(d2)) <= 1
    n = 20 if max(abs(d1), abs(d2)) <= 4 else 8
    total = 0.0
    for x0, x1 in zip(cuts1, cuts1[1:]):
        for y0, y1 in zip(cuts2, cuts2[1:]):
            at_origin = near and (x0 == 0 or x1 == 0) and (y0 == 0 or y1 == 0)
            if not at_origin:
                total += _rect_gl(x0, x1, y0, y1, d, gam, n)
                continue
            r1 = 1.0 if x0 == 0 else -1.0
            r2 = 1.0 if y0 == 0 else -1.0
            A, B = x1 - x0, y1 - y0
            # on this rectangle 1 - |t - d| is affine with a fixed sign pattern
            s1 = 1.0 if 0.5 * (x0 + x1) > d[0] else -1.0
            s2 = 1.0 if 0.5 * (y0 + y1) > d[1] else -1.0
            al1, be1 = 1 + s1 * d[0], -s1 * r1
            al2, be2 = 1 + s2 * d[1], -s2 * r2
            coeffs = (al1 * al2, be1 * al2, al1 * be2, be1 * be2)
            total += _corner_rect(A, B, coeffs, gam)
    return total


@lru_cache(maxsize=32)
def offset_weight_table(alpha: float, max_offset: int, secant_p: float | None = None) -> np.ndarray:
    """Unit-cell weights ``w[|d1|, |d2|]`` for the kernel ``|x - y|^(-2-alpha)``.

    With ``secant_p`` the weights are those of the difference-quotient surrogate
    ``|d|^(-p) int int |x - y|^(p-2-alpha)``.  Entry ``[0, 0]`` is zero.  A grid with
    spacing ``h`` uses ``h^(2 - alpha) * w``.
    """
    gam = -2.0 - alpha if secant_p is None else secant_p - 2.0 - alpha
    table = np.zeros((max_offset + 1, max_offset + 1))
    for i in range(max_offset + 1):
        for j in range(i + 1):
            if i == 0 and j == 0:
                continue
            val = _unit_offset_integral(i, j, gam)
            if secant_p is not None:
                val *= math.hypot(i, j) ** (-secant_p)
            table[i, j] = table[j, i] = val
    table.flags.writeable = False
    return table


def _corner_rect_angular(A, B, c, e_shift, gam, phi, n_ang=48):
    """Corner integral weighted by ``|cos(theta - phi)|^pw`` in polar form.

    Integrates ``(c00 + c10 t1 + c01 t2 + c11 t1 t2) |t|^gam |cos(theta - phi)|^e_shift``
    over ``[0, A] x [0, B]``; the radial power absorbs ``e_shift`` as ``r^e_shift``.
    """
    if A <= 0 or B <= 0:
        return 0.0
    x, w = _gl(n_ang)
    thc = math.atan2(B, A)
    cuts = [0.0, thc, math.pi / 2]
    for kink in (phi + math.pi / 2, phi - math.pi / 2, phi + 1.5 * math.pi, phi - 1.5 * math.pi):
        if 0.0 < kink < math.pi / 2:
            cuts.append(kink)
    cuts = sorted(cuts)
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        if hi - lo < 1e-15:
            continue
        th = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        wt = 0.5 * (hi - lo) * w
        co, si = np.cos(th), np.sin(th)
        R = np.where(th < thc, A / co, B / si)
        acc = np.zeros_like(th)
        for (pa, pb), coef in zip(((0, 0), (1, 0), (0, 1), (1, 1)), c):
            if coef == 0.0:
                continue
            e = pa + pb + gam + e_shift + 2.0
            acc += coef * R**e / e * co**pa * si**pb
        total += float(np.sum(wt * acc * np.abs(np.cos(th - phi)) ** e_shift))
    return total


def _near_gradient_integral(d, alpha, p, phi):
    """``int int |e.(x - y)|^p |x - y|^(-2-alpha)`` over unit cells at offset ``d``, ``e`` at angle ``phi``."""
    gam = -2.0 - alpha
    cuts1 = sorted({d[0] - 1.0, float(d[0]), d[0] + 1.0, 0.0})
    cuts2 = sorted({d[1] - 1.0, float(d[1]), d[1] + 1.0, 0.0})
    cuts1 = [t for t in cuts1 if d[0] - 1 <= t <= d[0] + 1]
    cuts2 = [t for t in cuts2 if d[1] - 1 <= t <= d[1] + 1]
    total = 0.0
    for x0, x1 in zip(cuts1, cuts1[1:]):
        for y0, y1 in zip(cuts2, cuts2[1:]):
            r1 = 1.0 if x0 >= 0 else -1.0
            r2 = 1.0 if y0 >= 0 else -1.0
            s1 = 1.0 if 0.5 * (x0 + x1) > d[0] else -1.0
            s2 = 1.0 if 0.5 * (y0 + y1) > d[1] else -1.0
            # weight (1 - |t1 - d1|)(1 - |t2 - d2|) in reflected coordinates tau = r * t >= 0
            al1, be1 = 1 + s1 * d[0], -s1 * r1
            al2, be2 = 1 + s2 * d[1], -s2 * r2
            coeffs = (al1 * al2, be1 * al2, al1 * be2, be1 * be2)
            ph = math.atan2(r2 * math.sin(phi), r1 * math.cos(phi)) % math.pi
            A0, A1 = sorted((abs(x0), abs(x1)))
            B0, B1 = sorted((abs(y0), abs(y1)))
            total += (
                _corner_rect_angular(A1, B1, coeffs, p, gam, ph)
                - _corner_rect_angular(A0, B1, coeffs, p, gam, ph)
                - _corner_rect_angular(A1, B0, coeffs, p, gam, ph)
                + _corner_rect_angular(A0, B0, coeffs, p, gam, ph)
            )
    return total


@lru_cache(maxsize=16)
def near_gradient_table(alpha: float, p: float, n_phi: int = 64) -> np.ndarray:
    """``T[d1 + 1, d2 + 1, k]``: near-field integrals for gradient direction ``k * pi / n_phi``."""
    table = np.zeros((3, 3, n_phi + 1))
    for d1 in (-1, 0, 1):
        for d2 in (-1, 0, 1):
            for kk in range(n_phi):
                table[d1 + 1, d2 + 1, kk] = _near_gradient_integral((d1, d2), alpha, p, kk * math.pi / n_phi)
    table[:, :, n_phi] = table[:, :, 0]
    table.flags.writeable = False
    return table


# ---------------------------------------------------------------------------
# kernels


@dataclass(frozen=True)
class KernelSpec:
    """Symmetric kernel ``m(x, y) / |x - y|^(n + s p)`` with ``1/Lambda <= m <= Lambda``.

    ``multiplier`` is ``None`` for the exact singular kernel; otherwise it is a
    vectorised callable that is symmetrised on use.
    """

    params: FracParams
    Lambda: float = 1.0
    multiplier: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    name: str = "exact"

    def __post_init__(self):
        if self.Lambda < 1.0:
            raise ValueError("Lambda must be >= 1")
        if self.multiplier is not None:
            pts = np.linspace(-3.0, 3.0, 41)
            X, Y = np.meshgrid(pts, pts, indexing="ij")
            m = self.m(X, Y)
            if np.any(m < 1.0 / self.Lambda - 1e-12) or np.any(m > self.Lambda + 1e-12):
                raise ValueError("kernel multiplier violates the bounds 1/Lambda <= m <= Lambda")

    def m(self, x, y):
        if self.multiplier is None:
            return np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape)
        return 0.5 * (self.multiplier(x, y) + self.multiplier(y, x))

    @classmethod
    def preset(cls, params: FracParams, name: str = "exact", Lambda: float = 1.0) -> "KernelSpec":
        """Named kernels: ``exact``, ``scaled`` (m = Lambda), ``oscillating`` (m between 1/Lambda and Lambda)."""
        if name == "exact":
            return cls(params, Lambda)
        if name == "scaled":
            return cls(params, Lambda, lambda x, y: np.full(np.broadcast(x, y).shape, float(Lambda)), name)
        if name == "oscillating":
            lo, hi = 1.0 / Lambda, Lambda
            mid, amp = 0.5 * (lo + hi), 0.5 * (hi - lo)
            return cls(params, Lambda, lambda x, y: mid + amp * np.cos(3 * x) * np.cos(3 * y), name)
        raise ValueError(f"unknown kernel preset {name!r}")


@dataclass(frozen=True)
class KernelWeights:
    """Interaction weights of a 1D grid.

    ``W[i, j]`` is the kernel integral over cells ``i`` and ``j`` (zero diagonal);
    ``V[i, k]`` the integral over cell ``i`` and exterior piece ``k`` whose value
    is ``g[k]``.
    """

    W: np.ndarray
    V: np.ndarray
    g: np.ndarray
    pieces: tuple
    h: float


def kernel_weights(u: GridFunction, kernel: KernelSpec) -> KernelWeights:
    """Cell-pair and cell-exterior weights for the exact kernel (closed form) times the multiplier.

    The multiplier is sampled at cell midpoints; for an exterior piece it is
    sampled at the piece endpoint nearest the box.
    """
    if u.n != 1:
        raise NotImplementedError("dense kernel weights are assembled for 1D grids only")
    alpha = kernel.params.sp
    if alpha >= 1.0:
        raise SeminormDivergesError(
            "piecewise-constant interaction energy diverges for s*p >= 1 (jumps between cells)"
        )
    gam = -1.0 - alpha
    e = u.edges
    N = u.cells
    idx = np.arange(N)
    I, J = np.meshgrid(idx, idx, indexing="ij")
    with np.errstate(invalid="ignore"):
        W = interval_pair_integral(e[I], e[I + 1], e[J], e[J + 1], gam)
    W[idx, idx] = 0.0
    mids = u.midpoints
    if kernel.multiplier is not None:
        W = W * kernel.m(mids[:, None], mids[None, :])
    pieces = tuple(u.exterior_partition())
    V = np.empty((N, len(pieces)))
    g = np.empty(len(pieces))
    for k, (lo, hi, val) in enumerate(pieces):
        V[:, k] = interval_pair_integral(e[:-1], e[1:], lo, hi, gam)
        g[k] = val
        if kernel.multiplier is not None:
            anchor = hi if hi <= u.a else lo
            V[:, k] *= kernel.m(mids, np.full(N, anchor))
    W = 0.5 * (W + W.T)
    return KernelWeights(W, V, g, pieces, u.h)


# ---------------------------------------------------------------------------
# seminorm


def _region_interval(u: GridFunction, region) -> tuple[float, float]:
    if region is None:
        return u.a, u.b
    if isinstance(region, Ball):
        (x0,) = region.center
        lo, hi = x0 - region.radius, x0 + region.radius
    else:
        lo, hi = map(float, region)
    if lo < u.a - 1e-12 or hi > u.b + 1e-12:
        raise ValueError(f"region ({lo}, {hi}) exits the box [{u.a}, {u.b}]")
    return lo, hi


def merge_runs(left, right, vals):
    """Fuse neighbouring pieces that touch and carry equal values.

    Exact-kernel weights are additive over intervals, so this leaves every
    piecewise-constant integral unchanged while shrinking the pair count.
    """
    left, right, vals = (np.asarray(t, dtype=float) for t in (left, right, vals))
    if vals.size < 2:
        return left, right, vals
    start = np.ones(vals.size, dtype=bool)
    start[1:] = (vals[1:] != vals[:-1]) | (left[1:] != right[:-1])
    idx = np.flatnonzero(start)
    ends = np.append(idx[1:], vals.size) - 1
    return left[idx], right[ends], vals[idx]


def _pair_sum_1d(left, right, vals, mids, p, gam, secant):
    """``sum_{i != j} |v_i - v_j|^p W_ij`` over disjoint sorted intervals."""
    M = len(vals)
    total = 0.0
    rows = max(1, _CHUNK // max(M, 1))
    for start in range(0, M, rows):
        stop = min(M, start + rows)
        i = np.arange(start, stop)[:, None]
        j = np.arange(M)[None, :]
        upper = j > i
        diff = np.abs(vals[i] - vals[j])
        active = upper & (diff > 0)
        if not np.any(active):
            continue
        ii, jj = np.nonzero(active)
        ii = ii + start
        w = interval_pair_integral(left[ii], right[ii], left[jj], right[jj], gam)
        if secant:
            w = w * np.abs(mids[ii] - mids[jj]) ** (-p)
        total += float(np.sum(np.abs(vals[ii] - vals[jj]) ** p * w))
    return 2.0 * total


def _seminorm_mode(u: GridFunction, params: FracParams, mode: str | None) -> str:
    if mode is None:
        mode = "exact" if params.sp < 1.0 else "smooth"
    if mode not in ("exact", "smooth"):
        raise ValueError(f"unknown seminorm mode {mode!r}")
    if mode == "exact" and params.sp >= 1.0:
        raise SeminormDivergesError(
            "the seminorm of a piecewise-constant function diverges for s*p >= 1; "
            "use mode='smooth' for continuous data"
        )
    if mode == "smooth" and not u.continuous:
        raise SeminormDivergesError("seminorm diverges: s*p >= 1 with a discontinuous function")
    return mode


def _cells_in_ball_2d(u: GridFunction, ball: Ball):
    w = ball_weights(u, ball)
    I, J = np.nonzero(w > 0)
    return I, J, u.values[I, J]


def _pair_sum_2d(I, J, vals, p, table):
    M = len(vals)
    total = 0.0
    rows = max(1, _CHUNK // max(M, 1))
    for start in range(0, M, rows):
        stop = min(M, start + rows)
        a = slice(start, stop)
        dI = np.abs(I[a, None] - I[None, :])
        dJ = np.abs(J[a, None] - J[None, :])
        total += float(np.sum(np.abs(vals[a, None] - vals[None, :]) ** p * table[dI, dJ]))
    return total


def _near_sum_2d(u: GridFunction, I, J, alpha, p):
    """Self and touching-cell pairs under the local linear model ``u(x) - u(y) ~ G.(x - y)``."""
    G1, G2 = np.gradient(np.asarray(u.values), u.h)
    table = near_gradient_table(round(alpha, 12), float(p))
    n_phi = table.shape[2] - 1
    inside = np.zeros(u.values.shape, dtype=bool)
    inside[I, J] = True
    total = 0.0
    for d1 in (-1, 0, 1):
        for d2 in (-1, 0, 1):
            I2, J2 = I + d1, J + d2
            ok = (I2 >= 0) & (I2 < u.cells) & (J2 >= 0) & (J2 < u.cells)
            ok[ok] = inside[I2[ok], J2[ok]]
            a1, a2, b1, b2 = I[ok], J[ok], I2[ok], J2[ok]
            g1 = 0.5 * (G1[a1, a2] + G1[b1, b2])
            g2 = 0.5 * (G2[a1, a2] + G2[b1, b2])
            mag = np.hypot(g1, g2)
            phi = np.mod(np.arctan2(g2, g1), math.pi) / math.pi * n_phi
            k0 = np.minimum(np.floor(phi).astype(int), n_phi - 1)
            frac = phi - k0
            tab = table[d1 + 1, d2 + 1]
            val = (1 - frac) * tab[k0] + frac * tab[k0 + 1]
            total += float(np.sum(mag**p * val))
    return u.h ** (2.0 + p - alpha) * total


def _self_sum_1d(u: GridFunction, left, right, keep, p, alpha):
    G = np.gradient(np.asarray(u.values), u.h)[keep]
    beta = p - 1.0 - alpha
    L = right - left
    return float(np.sum(np.abs(G) ** p * 2.0 * L ** (beta + 2.0) / ((beta + 1.0) * (beta + 2.0))))


def gagliardo_seminorm(
    u: GridFunction,
    region=None,
    params: FracParams | None = None,
    normalized: bool = False,
    mode: str | None = None,
) -> float:
    """``[u]^p_{W^{s,p}(region)}``: the p-th power of the Gagliardo seminorm.

    ``region`` is a :class:`Ball`, an interval ``(lo, hi)`` (1D) or ``None`` for
    the whole box.  ``mode='exact'`` integrates the piecewise-constant function
    exactly and needs ``s p < 1``.  ``mode='smooth'`` reads the cell values as
    samples of a continuous function: distant cell pairs use the difference
    quotient between cell centres, while a cell paired with itself or a touching
    cell uses the local finite-difference gradient.  It is finite for every ``s``
    and is the default when ``s p >= 1``.  With ``normalized`` the result is
    multiplied by ``1 - s``.
    """
    if params is None:
        raise TypeError("params is required")
    mode = _seminorm_mode(u, params, mode)
    alpha = params.sp
    p = params.p
    if u.n == 1:
        lo, hi = _region_interval(u, region)
        e = u.edges
        keep = (np.minimum(e[1:], hi) - np.maximum(e[:-1], lo)) > 0
        left, right, vals = clip_to_interval(u, lo, hi)
        if mode == "exact":
            left, right, vals = merge_runs(left, right, vals)
            value = _pair_sum_1d(left, right, vals, None, p, -1.0 - alpha, False)
        else:
            mids = u.midpoints[keep]
            value = _pair_sum_1d(left, right, vals, mids, p, p - 1.0 - alpha, True)
            value += _self_sum_1d(u, left, right, keep, p, alpha)
    else:
        ball = region if isinstance(region, Ball) else None
        if ball is None:
            raise ValueError("2D seminorms are taken over a Ball")
        c = np.asarray(ball.center)
        if np.any(c - ball.radius < u.a - 1e-12) or np.any(c + ball.radius > u.b + 1e-12):
            raise ValueError("region exits the box")
        I, J, vals = _cells_in_ball_2d(u, ball)
        span = int(max(I.max() - I.min(), J.max() - J.min())) if len(I) else 0
        if mode == "exact":
            table = offset_weight_table(round(alpha, 12), span)
            value = u.h ** (2.0 - alpha) * _pair_sum_2d(I, J, vals, p, table)
        else:
            table = np.array(offset_weight_table(round(alpha, 12), max(span, 1), float(p)))
            table[:2, :2] = 0.0
            value = u.h ** (2.0 - alpha) * _pair_sum_2d(I, J, vals, p, table)
            value += _near_sum_2d(u, I, J, alpha, p)
    return (1.0 - params.s) * value if normalized else value


# ---------------------------------------------------------------------------
# weighted L^{p-1}_s norm


def weighted_norm(u: GridFunction, params: FracParams) -> float:
    """``int |u|^(p-1) / (1 + |x|)^(n + s p) dx`` over R^n."""
    alpha = params.sp
    q = params.p - 1.0

    def prim(x):
        # antiderivative of (1 + |x|)^(-1-alpha), odd and vanishing at 0
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return np.sign(x) * (1.0 - np.where(np.isinf(x), 0.0, (1.0 + np.abs(x)) ** (-alpha))) / alpha

    if u.n == 1:
        e = u.edges
        total = float(np.sum(np.abs(u.values) ** q * (prim(e[1:]) - prim(e[:-1]))))
        for lo, hi, v in u.exterior_partition():
            total += abs(v) ** q * float(prim(hi) - prim(lo))
        return total
    # 2D: exterior is radial, so integrate it over full annuli and remove the box part
    def rprim(r):
        with np.errstate(over="ignore"):
            if math.isinf(r):
                return 0.0
            return -((1 + r) ** (-alpha)) / alpha + (1 + r) ** (-1 - alpha) / (1 + alpha)

    total = 0.0
    for lo, hi, v in u.exterior.radial_partition():
        total += abs(v) ** q * 2 * math.pi * (rprim(hi) - rprim(lo))
    m = u.midpoints
    X1, X2 = np.meshgrid(m, m, indexing="ij")
    R = np.hypot(X1, X2)
    ext_vals = _radial_values(u.exterior, R)
    wgt = (1 + R) ** (-2 - alpha) * u.h**2
    total += float(np.sum((np.abs(u.values) ** q - np.abs(ext_vals) ** q) * wgt))
    return total


def _radial_values(ext: ExteriorSpec, r: np.ndarray) -> np.ndarray:
    out = np.full(r.shape, ext.at_infinity)
    for lo, hi, v in ext.pieces:
        out = np.where((r >= lo) & (r <= hi), v, out)
    return out


# ---------------------------------------------------------------------------
# tails


@dataclass(frozen=True)
class TailValue:
    tail: float
    tail_bar: float
    x0: tuple[float, ...]
    R: float


def _tail_integral_1d(u: GridFunction, x0: float, R: float, alpha: float, q: float) -> float:
    """``int_{|x - x0| > R} |u|^q |x - x0|^(-1-alpha) dx`` in closed form."""
    gam = -1.0 - alpha
    lo_b, hi_b = x0 - R, x0 + R
    e = u.edges
    absq = np.abs(u.values) ** q
    left_hi = np.minimum(e[1:], lo_b)
    left_ok = left_hi > e[:-1]
    right_lo = np.maximum(e[:-1], hi_b)
    right_ok = e[1:] > right_lo
    total = 0.0
    if np.any(left_ok):
        total += float(np.sum(absq[left_ok] * interval_point_integral(x0, e[:-1][left_ok], left_hi[left_ok], gam)))
    if np.any(right_ok):
        total += float(np.sum(absq[right_ok] * interval_point_integral(x0, right_lo[right_ok], e[1:][right_ok], gam)))
    for lo, hi, v in u.exterior_partition():
        if v == 0.0:
            continue
        for c, d in ((lo, min(hi, lo_b)), (max(lo, hi_b), hi)):
            if d > c:
                total += abs(v) ** q * float(interval_point_integral(x0, c, d, gam))
    return total


def _box_exit_distance(x0: np.ndarray, dirs: np.ndarray, a: float, b: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        t_hi = np.where(dirs > 0, (b - x0) / dirs, np.inf)
        t_lo = np.where(dirs < 0, (a - x0) / dirs, np.inf)
    return np.min(np.minimum(t_hi, t_lo), axis=1)


def _exterior_ray_integral_2d(u: GridFunction, x0, R: float, alpha: float, q: float, weight_fn=None,
                              n_theta: int = 1440) -> float:
    """Exterior contribution of ``int |g(|x|)|^q |x - x0|^(-2-alpha)`` beyond radius R around x0.

    Rays from ``x0``; along each ray the radial pieces give closed-form integrals
    of ``rho^(-1-alpha)``.
    """
    x0 = np.asarray(x0, dtype=float)
    th = (np.arange(n_theta) + 0.5) * 2 * math.pi / n_theta
    dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
    start = np.maximum(_box_exit_distance(x0[None, :], dirs, u.a, u.b), R)
    pieces = u.exterior.radial_partition()
    radii = sorted({lo for lo, _, _ in pieces} | {hi for _, hi, _ in pieces if math.isfinite(hi)})
    bdot = dirs @ x0
    c0 = float(x0 @ x0)
    total = np.zeros(n_theta)
    for t in range(n_theta):
        brk = [start[t]]
        for rad in radii:
            disc = bdot[t] ** 2 - (c0 - rad**2)
            if disc <= 0:
                continue
            for rho in (-bdot[t] - math.sqrt(disc), -bdot[t] + math.sqrt(disc)):
                if rho > start[t]:
                    brk.append(rho)
        brk = sorted(brk) + [math.inf]
        acc = 0.0
        for r0, r1 in zip(brk, brk[1:]):
            mid = r0 + 1.0 if math.isinf(r1) else 0.5 * (r0 + r1)
            pt = x0 + mid * dirs[t]
            v = u.exterior.value_at(float(np.hypot(*pt))) if not math.isinf(r1) else u.exterior.at_infinity
            if v == 0.0:
                continue
            hi_term = 0.0 if math.isinf(r1) else r1 ** (-alpha)
            acc += abs(v) ** q * (r0 ** (-alpha) - hi_term) / alpha
        total[t] = acc
    return float(np.sum(total) * 2 * math.pi / n_theta)


def _tail_integral_2d(u: GridFunction, x0, R: float, alpha: float, q: float, sub: int = 4) -> float:
    x0 = np.asarray(x0, dtype=float)
    h = u.h
    offs = (np.arange(sub) + 0.5) / sub * h
    e = u.edges[:-1]
    pts = (e[:, None] + offs[None, :]).ravel()
    P1, P2 = np.meshgrid(pts, pts, indexing="ij")
    D = np.hypot(P1 - x0[0], P2 - x0[1])
    vals = np.repeat(np.repeat(np.abs(u.values) ** q, sub, axis=0), sub, axis=1)
    with np.errstate(divide="ignore"):
        integrand = np.where(D >= R, vals * D ** (-2.0 - alpha), 0.0)
    box_part = float(np.sum(integrand)) * (h / sub) ** 2
    return box_part + _exterior_ray_integral_2d(u, x0, R, alpha, q)


def tail(u: GridFunction, params: FracParams, x0, R: float, normalized: bool = False) -> TailValue:
    """``Tail_{s,p}(u; x0, R)`` and its rescaled companion ``R^(-sp/(p-1)) Tail``.

    ``normalized`` inserts the factor ``1 - s`` in front of the integral.
    """
    if not R > 0:
        raise ValueError(f"tail radius must be positive, got {R}")
    alpha, q = params.sp, params.p - 1.0
    x0 = tuple(float(t) for t in np.atleast_1d(np.asarray(x0, dtype=float)))
    if u.n == 1:
        integral = _tail_integral_1d(u, x0[0], R, alpha, q)
    else:
        integral = _tail_integral_2d(u, x0, R, alpha, q)
    if normalized:
        integral *= 1.0 - params.s
    t = (R**alpha * integral) ** (1.0 / q)
    return TailValue(t, R ** (-alpha / q) * t, x0, float(R))


# ---------------------------------------------------------------------------
# L^p on balls


def lp_norm_on_ball(u: GridFunction, ball: Ball, p: float) -> float:
    """``||u||^p_{L^p(ball)}`` (the p-th power); exact in 1D, including exterior pieces."""
    w = ball_weights(u, ball)
    total = float(np.sum(w * np.abs(u.values) ** p))
    if u.n == 1:
        (x0,) = ball.center
        for lo, hi, v in u.exterior_partition():
            ov = min(hi, x0 + ball.radius) - max(lo, x0 - ball.radius)
            if ov > 0:
                total += ov * abs(v) ** p
    return total


# ---------------------------------------------------------------------------
# cross term


def cross_term(
    u: GridFunction,
    k: float,
    sign: str,
    ball: Ball,
    params: FracParams,
    restrict_to_ball: bool = False,
) -> float:
    """``int_{B} (u-k)_pm(x) int (u(y)-k)_mp^(p-1) |x-y|^(-n-sp) dy dx``.

    ``y`` ranges over all of R^n, or over the ball itself when
    ``restrict_to_ball`` is set.
    """
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    if params.sp >= 1.0:
        raise SeminormDivergesError("cross term of piecewise-constant data diverges for s*p >= 1")
    other = "-" if sign == "+" else "+"
    w = truncate(u, k, sign)
    z = truncate(u, k, other)
    alpha, q = params.sp, params.p - 1.0
    c = np.asarray(ball.center)
    if np.any(c - ball.radius < u.a - 1e-12) or np.any(c + ball.radius > u.b + 1e-12):
        raise ValueError("ball exits the box")
    if u.n == 1:
        return _cross_1d(w, z, ball, alpha, q, restrict_to_ball)
    return _cross_2d(w, z, ball, alpha, q, restrict_to_ball)


def _cross_1d(w, z, ball, alpha, q, restrict):
    gam = -1.0 - alpha
    (x0,) = ball.center
    lo, hi = x0 - ball.radius, x0 + ball.radius
    xl, xr, xv = clip_to_interval(w, lo, hi)
    sel = xv > 0
    xl, xr, xv = merge_runs(xl[sel], xr[sel], xv[sel])
    if xv.size == 0:
        return 0.0
    if restrict:
        yl, yr, yv = clip_to_interval(z, lo, hi)
    else:
        e = z.edges
        yl, yr, yv = e[:-1], e[1:], np.asarray(z.values)
        ext = [(a, b, v) for a, b, v in z.exterior_partition() if v > 0]
        if ext:
            yl = np.concatenate([yl, [t[0] for t in ext]])
            yr = np.concatenate([yr, [t[1] for t in ext]])
            yv = np.concatenate([yv, [t[2] for t in ext]])
    sel = yv > 0
    order = np.argsort(yl[sel], kind="stable")
    yl, yr, yv = merge_runs(yl[sel][order], yr[sel][order], yv[sel][order])
    yv = yv**q
    if yv.size == 0:
        return 0.0
    total = 0.0
    rows = max(1, _CHUNK // len(yv))
    for start in range(0, len(xv), rows):
        s = slice(start, start + rows)
        W = interval_pair_integral(xl[s, None], xr[s, None], yl[None, :], yr[None, :], gam)
        total += float(xv[s] @ (W @ yv))
    return total


def _cross_2d(w, z, ball, alpha, q, restrict):
    I, J, xv = _cells_in_ball_2d(w, ball)
    sel = xv > 0
    I, J, xv = I[sel], J[sel], xv[sel]
    if xv.size == 0:
        return 0.0
    zq = np.abs(z.values) ** q
    if restrict:
        mask = ball_weights(z, ball) > 0
        zq = np.where(mask, zq, 0.0)
    YI, YJ = np.nonzero(zq > 0)
    yv = zq[YI, YJ]
    total = 0.0
    if yv.size:
        span = max(z.cells - 1, 1)
        table = offset_weight_table(round(alpha, 12), span)
        for a in range(len(xv)):
            wts = table[np.abs(YI - I[a]), np.abs(YJ - J[a])]
            total += xv[a] * float(wts @ yv)
        total *= z.h ** (2.0 - alpha)
    if not restrict:
        m = z.midpoints
        zext = z.exterior.map(lambda v: abs(v) ** q)
        zunit = GridFunction(z.a, z.b, z.cells, np.zeros_like(z.values), zext, 2)
        for a in range(len(xv)):
            pt = (m[I[a]], m[J[a]])
            total += xv[a] * z.h**2 * _exterior_ray_integral_2d(zunit, pt, 0.0 + 1e-300, alpha, 1.0, n_theta=360)
    return total
