"""Piecewise-constant grid functions on R^n (n = 1, 2) with closed-form exterior data.

A :class:`GridFunction` stores one value per cell of a uniform grid on the box
``[a, b]^n``; outside the box it is described by an :class:`ExteriorSpec`, a
finite list of constant pieces (intervals in 1D, radial annuli in 2D) plus a
constant value at infinity.  Every nonlocal integral in the package factors over
these constant pieces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

__all__ = [
    "FracParams",
    "ExteriorSpec",
    "GridFunction",
    "Ball",
    "SpecError",
    "build_grid_function",
    "level_measure",
    "truncate",
    "oscillation",
    "ball_weights",
    "clip_to_interval",
    "sup_inf_on_ball",
    "FAMILIES",
]

FAMILIES = ("constant", "step", "ramp", "power", "nodal")


class SpecError(ValueError):
    """Malformed function-spec document or invalid parameter."""


@dataclass(frozen=True)
class FracParams:
    n: int
    s: float
    p: float
    subcritical: bool = field(init=False)

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.n}")
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if not self.p > 1.0:
            raise ValueError(f"p must exceed 1, got {self.p}")
        object.__setattr__(self, "subcritical", self.n > self.s * self.p)

    @property
    def sp(self) -> float:
        return self.s * self.p


def _as_float(x, name="value") -> float:
    if isinstance(x, str):
        x = x.strip().lower()
        if x in ("inf", "+inf", "infinity"):
            return math.inf
        if x in ("-inf", "-infinity"):
            return -math.inf
    if x is None:
        raise SpecError(f"{name} is missing")
    try:
        return float(x)
    except (TypeError, ValueError):
        raise SpecError(f"{name} is not a number: {x!r}") from None


@dataclass(frozen=True)
class ExteriorSpec:
    """Constant pieces outside the box.

    In 1D each piece is an interval ``(lo, hi, value)``; in 2D the interval is a
    range of radii ``|x|``.  Points covered by no piece take ``at_infinity``.
    """

    pieces: tuple[tuple[float, float, float], ...] = ()
    at_infinity: float = 0.0

    def __post_init__(self):
        pieces = tuple(sorted((float(lo), float(hi), float(v)) for lo, hi, v in self.pieces))
        for lo, hi, v in pieces:
            if not lo < hi:
                raise SpecError(f"exterior piece ({lo}, {hi}) is empty")
            if not math.isfinite(v):
                raise SpecError("exterior values must be finite")
        for (_, hi0, _), (lo1, _, _) in zip(pieces, pieces[1:]):
            if lo1 < hi0:
                raise SpecError("exterior pieces overlap")
        if not math.isfinite(self.at_infinity):
            raise SpecError("at_infinity must be finite")
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "at_infinity", float(self.at_infinity))

    @classmethod
    def constant(cls, c: float) -> "ExteriorSpec":
        return cls((), c)

    def map(self, fn) -> "ExteriorSpec":
        """Apply a scalar map to every exterior value."""
        return ExteriorSpec(tuple((lo, hi, fn(v)) for lo, hi, v in self.pieces), fn(self.at_infinity))

    def value_at(self, t: float) -> float:
        for lo, hi, v in self.pieces:
            if lo <= t <= hi:
                return v
        return self.at_infinity

    def _cover(self, lo_side: float, hi_side: float) -> list[tuple[float, float, float]]:
        out = []
        cursor = lo_side
        for lo, hi, v in self.pieces:
            lo, hi = max(lo, lo_side), min(hi, hi_side)
            if lo >= hi:
                continue
            if lo > cursor:
                out.append((cursor, lo, self.at_infinity))
            out.append((lo, hi, v))
            cursor = hi
        if cursor < hi_side:
            out.append((cursor, hi_side, self.at_infinity))
        return out

    def partition(self, a: float, b: float) -> list[tuple[float, float, float]]:
        """Cover ``(-inf, a] U [b, inf)`` by constant intervals (1D reading)."""
        merged: list[tuple[float, float, float]] = []
        for lo, hi, v in self._cover(-math.inf, a) + self._cover(b, math.inf):
            if merged and merged[-1][1] == lo and merged[-1][2] == v:
                merged[-1] = (merged[-1][0], hi, v)
            else:
                merged.append((lo, hi, v))
        return merged

    def radial_partition(self) -> list[tuple[float, float, float]]:
        """Cover radii ``[0, inf)`` by constant annuli (2D reading)."""
        return self._cover(0.0, math.inf)

    def max_abs(self) -> float:
        return max([abs(self.at_infinity)] + [abs(v) for _, _, v in self.pieces])

    def to_doc(self) -> dict:
        def enc(t):
            return t if math.isfinite(t) else ("inf" if t > 0 else "-inf")

        return {
            "pieces": [{"from": enc(lo), "to": enc(hi), "value": v} for lo, hi, v in self.pieces],
            "at_infinity": self.at_infinity,
        }


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        object.__setattr__(self, "center", tuple(float(t) for t in c))
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")

    @property
    def volume(self) -> float:
        return 2.0 * self.radius if len(self.center) == 1 else math.pi * self.radius**2


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Cell values on the uniform grid of ``[a, b]^n`` plus exterior data.

    ``continuous`` tags whether the represented function is meant to be
    continuous (ramps, powers, constants); jump data such as the step must keep
    it False so that seminorm calls with ``s*p >= 1`` are refused.
    """

    a: float
    b: float
    cells: int
    values: np.ndarray
    exterior: ExteriorSpec = ExteriorSpec()
    n: int = 1
    continuous: bool = True
    family: str = "nodal"

    def __post_init__(self):
        if self.cells < 2:
            raise SpecError("cells must be at least 2")
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.b > self.a):
            raise SpecError("box must satisfy a < b, both finite")
        vals = np.array(self.values, dtype=float)
        shape = (self.cells,) * self.n
        if vals.shape != shape:
            raise SpecError(f"values have shape {vals.shape}, expected {shape}")
        if not np.all(np.isfinite(vals)):
            raise SpecError("values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.cells

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.cells + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return self.a + (np.arange(self.cells) + 0.5) * self.h

    @property
    def cell_volume(self) -> float:
        return self.h**self.n

    def with_values(self, values, *, exterior: ExteriorSpec | None = None, continuous=None, family=None):
        return GridFunction(
            self.a,
            self.b,
            self.cells,
            values,
            self.exterior if exterior is None else exterior,
            self.n,
            self.continuous if continuous is None else continuous,
            self.family if family is None else family,
        )

    def __neg__(self):
        return self.with_values(-self.values, exterior=self.exterior.map(lambda v: -v))

    def __add__(self, c: float):
        return self.with_values(self.values + c, exterior=self.exterior.map(lambda v: v + c))

    def __mul__(self, t: float):
        return self.with_values(self.values * t, exterior=self.exterior.map(lambda v: v * t))

    __rmul__ = __mul__

    def contains(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return bool(np.all((x > self.a) & (x < self.b)))

    def dist_to_boundary(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return float(np.min(np.minimum(x - self.a, self.b - x)))

    def cell_index(self, x) -> tuple[int, ...]:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.clip(np.floor((x - self.a) / self.h).astype(int), 0, self.cells - 1)
        return tuple(int(i) for i in idx)

    def evaluate(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.all((x >= self.a) & (x <= self.b)):
            return float(self.values[self.cell_index(x)])
        t = float(x[0]) if self.n == 1 else float(np.hypot(*x))
        return self.exterior.value_at(t)

    def exterior_partition(self) -> list[tuple[float, float, float]]:
        if self.n != 1:
            raise NotImplementedError("interval partition of the exterior is 1D only")
        return self.exterior.partition(self.a, self.b)

    def to_doc(self) -> dict:
        return {
            "family": "nodal",
            "params": {"values": self.values.tolist(), "continuous": self.continuous},
            "box": {"a": self.a, "b": self.b},
            "cells": self.cells,
            "dim": self.n,
            "exterior": self.exterior.to_doc(),
        }


# ---------------------------------------------------------------------------
# construction from a function-spec document


def _parse_exterior(doc, family, params) -> ExteriorSpec:
    if doc is None:
        return ExteriorSpec()
    if isinstance(doc, str):
        if doc != "extend":
            raise SpecError(f"unknown exterior shorthand {doc!r}")
        if family == "constant":
            return ExteriorSpec.constant(_as_float(params.get("c", 1.0), "c"))
        if family == "step":
            at = _as_float(params.get("at", 0.0), "at")
            lo, hi = _as_float(params.get("low", 0.0)), _as_float(params.get("high", 1.0))
            return ExteriorSpec(((at, math.inf, hi),), lo)
        raise SpecError(f"exterior 'extend' is only defined for constant and step families, not {family!r}")
    pieces = []
    for piece in doc.get("pieces", []):
        pieces.append(
            (
                _as_float(piece.get("from"), "exterior from"),
                _as_float(piece.get("to"), "exterior to"),
                _as_float(piece.get("value"), "exterior value"),
            )
        )
    return ExteriorSpec(tuple(pieces), _as_float(doc.get("at_infinity", 0.0), "at_infinity"))


def _family_values(family: str, params: Mapping[str, Any], pts: np.ndarray, n: int) -> tuple[np.ndarray, bool]:
    """Evaluate a built-in family at cell midpoints; ``pts`` has shape (..., n)."""
    x1 = pts[..., 0]
    radius = np.sqrt(np.sum(pts**2, axis=-1))
    if family == "constant":
        c = _as_float(params.get("c", 1.0), "c")
        return np.full(pts.shape[:-1], c), True
    if family == "step":
        at = _as_float(params.get("at", 0.0), "at")
        lo, hi = _as_float(params.get("low", 0.0), "low"), _as_float(params.get("high", 1.0), "high")
        return np.where(x1 > at, hi, lo), lo == hi
    if family == "ramp":
        slope = _as_float(params.get("slope", 1.0), "slope")
        icpt = _as_float(params.get("intercept", 0.0), "intercept")
        vals = slope * x1 + icpt
        if "clamp" in params:
            lo, hi = (_as_float(t, "clamp") for t in params["clamp"])
            vals = np.clip(vals, lo, hi)
        return vals, True
    if family == "power":
        beta = _as_float(params.get("beta", 0.5), "beta")
        scale = _as_float(params.get("scale", 1.0), "scale")
        if beta <= 0:
            raise SpecError("power family needs beta > 0")
        return scale * radius**beta, True
    raise SpecError(f"unknown family {family!r}; expected one of {FAMILIES}")


def build_grid_function(spec: Mapping[str, Any]) -> GridFunction:
    """Build a :class:`GridFunction` from a function-spec document.

    Keys: ``family``, ``params``, ``box: {a, b}``, ``cells``, optional ``dim``
    (1 or 2) and ``exterior: {pieces: [{from, to, value}], at_infinity}`` (or the
    shorthand ``"extend"`` for the constant and step families).
    """
    try:
        family = spec["family"]
        box = spec["box"]
        cells = int(spec["cells"])
    except KeyError as exc:
        raise SpecError(f"function spec is missing key {exc.args[0]!r}") from None
    params = dict(spec.get("params") or {})
    n = int(spec.get("dim", 1))
    if n not in (1, 2):
        raise SpecError("dim must be 1 or 2")
    a, b = _as_float(box.get("a"), "box.a"), _as_float(box.get("b"), "box.b")
    if cells < 2:
        raise SpecError("cells must be at least 2")
    for key, val in params.items():
        if isinstance(val, (int, float)) and not math.isfinite(val):
            raise SpecError(f"parameter {key} is not finite")
    exterior = _parse_exterior(spec.get("exterior"), family, params)
    if family == "nodal":
        vals = np.asarray(params.get("values"), dtype=float)
        continuous = bool(params.get("continuous", False))
    else:
        h = (b - a) / cells
        mids = a + (np.arange(cells) + 0.5) * h
        if n == 1:
            pts = mids[:, None]
        else:
            X1, X2 = np.meshgrid(mids, mids, indexing="ij")
            pts = np.stack([X1, X2], axis=-1)
        vals, continuous = _family_values(family, params, pts, n)
    if not np.all(np.isfinite(vals)):
        raise SpecError("family produced non-finite values")
    return GridFunction(a, b, cells, vals, exterior, n, continuous, family)


# ---------------------------------------------------------------------------
# geometry helpers


def clip_to_interval(u: GridFunction, lo: float, hi: float):
    """Cells of a 1D grid function clipped to ``[lo, hi]``.

    Returns ``(left, right, values)`` arrays, dropping empty pieces.  Only the
    in-box part is returned; callers handle the exterior separately.
    """
    e = u.edges
    left = np.maximum(e[:-1], lo)
    right = np.minimum(e[1:], hi)
    keep = right > left
    return left[keep], right[keep], np.asarray(u.values)[keep]


def ball_weights(u: GridFunction, ball: Ball) -> np.ndarray:
    """Measure of each cell inside the ball (exact in 1D, midpoint rule in 2D)."""
    if u.n == 1:
        (x0,) = ball.center
        e = u.edges
        return np.clip(np.minimum(e[1:], x0 + ball.radius) - np.maximum(e[:-1], x0 - ball.radius), 0.0, None)
    m = u.midpoints
    X1, X2 = np.meshgrid(m - ball.center[0], m - ball.center[1], indexing="ij")
    return np.where(X1**2 + X2**2 < ball.radius**2, u.h**2, 0.0)


def _intersecting_cells(u: GridFunction, ball: Ball) -> np.ndarray:
    if u.n == 1:
        (x0,) = ball.center
        e = u.edges
        return (e[:-1] < x0 + ball.radius) & (e[1:] > x0 - ball.radius)
    e = u.edges
    lo, hi = e[:-1], e[1:]
    d1 = np.maximum(np.maximum(lo - ball.center[0], ball.center[0] - hi), 0.0)
    d2 = np.maximum(np.maximum(lo - ball.center[1], ball.center[1] - hi), 0.0)
    D1, D2 = np.meshgrid(d1, d2, indexing="ij")
    return D1**2 + D2**2 < ball.radius**2


def _check_center(u: GridFunction, ball: Ball):
    if len(ball.center) != u.n:
        raise ValueError("ball dimension does not match the grid function")
    if not u.contains(ball.center):
        raise ValueError(f"ball center {ball.center} lies outside the box")


def _exterior_level_measure_1d(u: GridFunction, ball: Ball, mask_fn) -> float:
    (x0,) = ball.center
    lo, hi = x0 - ball.radius, x0 + ball.radius
    total = 0.0
    for plo, phi, v in u.exterior_partition():
        overlap = min(phi, hi) - max(plo, lo)
        if overlap > 0 and mask_fn(v):
            total += overlap
    return total


def level_measure(u: GridFunction, k: float, sign: str, ball: Ball) -> float:
    """Lebesgue measure of ``{u > k}`` (sign '+') or ``{u < k}`` (sign '-') inside the ball."""
    _check_center(u, ball)
    if sign == "+":
        mask_fn = lambda v: v > k  # noqa: E731
    elif sign == "-":
        mask_fn = lambda v: v < k  # noqa: E731
    else:
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    w = ball_weights(u, ball)
    total = float(np.sum(w[mask_fn(u.values)]))
    if u.n == 1:
        total += _exterior_level_measure_1d(u, ball, mask_fn)
    return total


def truncate(u: GridFunction, k: float, sign: str) -> GridFunction:
    """Return ``(u - k)_+`` (sign '+') or ``(u - k)_-`` (sign '-') on the same grid."""
    if sign == "+":
        fn = lambda v: max(v - k, 0.0)  # noqa: E731
        vals = np.maximum(u.values - k, 0.0)
    elif sign == "-":
        fn = lambda v: max(k - v, 0.0)  # noqa: E731
        vals = np.maximum(k - u.values, 0.0)
    else:
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    return u.with_values(vals, exterior=u.exterior.map(fn))


def sup_inf_on_ball(u: GridFunction, ball: Ball) -> tuple[float, float]:
    """Max and min of the cell values whose cells meet the (open) ball."""
    cells = _intersecting_cells(u, ball)
    vals = u.values[cells]
    return float(vals.max()), float(vals.min())


def oscillation(u: GridFunction, ball: Ball) -> float:
    """``max - min`` of the cell values whose cells intersect the ball."""
    _check_center(u, ball)
    c = np.asarray(ball.center)
    if np.any(c - ball.radius < u.a - 1e-12) or np.any(c + ball.radius > u.b + 1e-12):
        raise ValueError("ball exits the box")
    hi, lo = sup_inf_on_ball(u, ball)
    return hi - lo


def nodal_from_values(values: Sequence[float], a: float, b: float, exterior: ExteriorSpec | None = None,
                      continuous: bool = True) -> GridFunction:
    vals = np.asarray(values, dtype=float)
    return GridFunction(a, b, vals.shape[0], vals, exterior or ExteriorSpec(), vals.ndim, continuous, "nodal")
