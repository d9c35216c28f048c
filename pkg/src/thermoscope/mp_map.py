"""The Manneville-Pomeau map x -> x(1 + x^alpha) mod 1 on [0, 1].

Both branches are inverses of the same convex function u(x) = x + x^(1+alpha):
the left branch solves u(x) = t on [0, x1] and the right branch solves
u(x) = t + 1 on (x1, 1]. Everything below is built on that single solve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Tuple

import numpy as np

from .errors import DomainError, SolverFailure

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class MapParams:
    alpha: float
    solver_tol: float = 1e-14

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be a positive finite number, got {self.alpha!r}")
        if not self.solver_tol > 0:
            raise DomainError(f"solver_tol must be positive, got {self.solver_tol!r}")

    @cached_property
    def branch_point(self) -> float:
        """The discontinuity x1, the root of x(1 + x^alpha) = 1."""
        return solve_expansion(1.0, self.alpha, self.solver_tol)

    @property
    def exponent(self) -> float:
        """1/alpha + 1, the growth exponent of derivatives along excursions."""
        return 1.0 / self.alpha + 1.0


def _u(x, a):
    return x + x ** (1.0 + a)


def solve_expansion(s: float, alpha: float, tol: float = 1e-14) -> float:
    """Root in [0, 1] of x + x^(1+alpha) = s for s in [0, 2].

    Safeguarded Newton: u is convex and increasing, so the root is bracketed by
    [s/2, min(s, 1)] and a Newton step that leaves the bracket is replaced by
    bisection.
    """
    if s <= 0.0:
        return 0.0
    lo, hi = 0.5 * s, min(s, 1.0)
    x = hi
    a1 = 1.0 + alpha
    for _ in range(400):
        r = x + x ** a1 - s
        if r == 0.0:
            return x
        if r > 0.0:
            hi = x
        else:
            lo = x
        x_new = x - r / (1.0 + a1 * x ** alpha)
        if not lo <= x_new <= hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 2.0 * _EPS * x_new:
            x = x_new
            break
        x = x_new
    if abs(_u(x, alpha) - s) > tol:
        raise SolverFailure(f"inverse solve for s={s!r} missed residual {tol}")
    return x


def solve_expansion_array(s, alpha: float) -> np.ndarray:
    """Vectorised solve of x + x^(1+alpha) = s, s in [0, 2].

    Newton from x = min(s, 1) approaches the root monotonically from above by
    convexity, so no bracketing is needed.
    """
    s = np.asarray(s, dtype=float)
    x = np.minimum(s, 1.0)
    a1 = 1.0 + alpha
    for _ in range(100):
        step = (x + x ** a1 - s) / (1.0 + a1 * x ** alpha)
        x = np.maximum(x - step, 0.5 * s)
        if not np.any(np.abs(step) > 2.0 * _EPS * x):
            break
    return x


def _check_unit(x, what="x"):
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"{what}={x!r} is outside [0, 1]")


def map_forward(x: float, params: MapParams) -> float:
    _check_unit(x)
    v = x * (1.0 + x ** params.alpha)
    return v if v <= 1.0 else v - 1.0


def map_forward_array(x, params: MapParams) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    v = x * (1.0 + x ** params.alpha)
    return np.where(v <= 1.0, v, v - 1.0)


def map_derivative(x: float, params: MapParams) -> float:
    _check_unit(x)
    a = params.alpha
    return 1.0 + (1.0 + a) * x ** a


def log_map_derivative(x, params: MapParams):
    """log Df, accurate near the neutral point; accepts scalars or arrays."""
    a = params.alpha
    return np.log1p((1.0 + a) * np.asarray(x, dtype=float) ** a)


def inverse_branch(target: float, branch: int, params: MapParams) -> float:
    """g0 (branch 0, onto [0, x1]) or g1 (branch 1, onto (x1, 1])."""
    if branch == 0:
        _check_unit(target, "target")
        return solve_expansion(target, params.alpha, params.solver_tol)
    if branch == 1:
        if not (0.0 < target <= 1.0):
            raise DomainError(f"target={target!r} is outside (0, 1] for branch 1")
        return solve_expansion(target + 1.0, params.alpha, params.solver_tol)
    raise DomainError(f"branch must be 0 or 1, got {branch!r}")


def inverse_branch_array(target, branch: int, params: MapParams) -> np.ndarray:
    """Vectorised inverse branch; branch 1 at target 0 gives the limit x1."""
    t = np.asarray(target, dtype=float)
    return solve_expansion_array(t + 1.0 if branch == 1 else t, params.alpha)


@dataclass(frozen=True)
class MarkedOrbit:
    """x_0 = 1 > x_1 > ... > x_N and y_1 = 1 > y_2 > ... > y_N.

    ``xs[j]`` is x_j and ``ys[n - 1]`` is y_n, so both arrays are indexed from
    the natural starting point of their sequence.
    """

    params: MapParams
    xs: np.ndarray = field(repr=False)
    ys: np.ndarray = field(repr=False)

    @property
    def max_index(self) -> int:
        return len(self.xs) - 1

    def x(self, j: int) -> float:
        return float(self.xs[j])

    def y(self, n: int) -> float:
        if n < 1:
            raise DomainError("y_n is defined for n >= 1")
        return float(self.ys[n - 1])


def build_marked_orbit(params: MapParams, N: int) -> MarkedOrbit:
    """Marked points up to index N, each x_{j+1} solved from x_j directly."""
    if N < 0:
        raise DomainError("N must be non-negative")
    a = params.alpha
    a1 = 1.0 + a
    xs = np.empty(N + 1)
    xs[0] = 1.0
    prev = 1.0
    for j in range(1, N + 1):
        # Newton from x = x_j, which lies above the root by convexity
        s = prev
        x = s
        for _ in range(100):
            step = (x + x ** a1 - s) / (1.0 + a1 * x ** a)
            x -= step
            if abs(step) <= 2.0 * _EPS * x:
                break
        xs[j] = x
        prev = x
    if N >= 1:
        resid = np.abs(xs[1:] + xs[1:] ** a1 - xs[:-1])
        if resid.max() > 10.0 * params.solver_tol:
            raise SolverFailure("marked orbit residual exceeds 10*solver_tol")
        if not np.all(np.diff(xs) < 0):
            raise SolverFailure("marked points stopped decreasing: precision exhausted")
    ys = solve_expansion_array(xs[:-1] + 1.0, a) if N >= 1 else np.empty(0)
    if N >= 1:
        resid = np.abs(ys + ys ** a1 - 1.0 - xs[:-1])
        if resid.max() > 10.0 * params.solver_tol:
            raise SolverFailure("y_n residual exceeds 10*solver_tol")
    xs.setflags(write=False)
    ys.setflags(write=False)
    return MarkedOrbit(params, xs, ys)


@dataclass(frozen=True)
class Cylinder:
    word: str
    lo: float
    hi: float
    lo_closed: bool
    hi_closed: bool

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float, slack: float = 0.0) -> bool:
        above = x >= self.lo - slack if self.lo_closed else x > self.lo - slack
        below = x <= self.hi + slack if self.hi_closed else x < self.hi + slack
        return above and below


def cylinder_from_word(word: str, params: MapParams) -> Cylinder:
    """The set of points whose first len(word) itinerary digits equal word."""
    if not word or set(word) - {"0", "1"}:
        raise DomainError(f"word must be a nonempty binary string, got {word!r}")
    lo, hi, lo_closed, hi_closed = 0.0, 1.0, True, True
    for digit in reversed(word):
        if digit == "0":
            lo = inverse_branch(lo, 0, params)
            hi = inverse_branch(hi, 0, params)
        else:
            # the right branch only sees (0, 1]; its lower end is the open x1
            if lo == 0.0:
                lo, lo_closed = params.branch_point, False
            else:
                lo = inverse_branch(lo, 1, params)
            hi = inverse_branch(hi, 1, params)
    return Cylinder(word, lo, hi, lo_closed, hi_closed)


def itinerary(x: float, n: int, params: MapParams) -> str:
    _check_unit(x)
    x1 = params.branch_point
    digits = []
    for _ in range(n):
        digits.append("0" if x <= x1 else "1")
        x = map_forward(x, params)
    return "".join(digits)


def log_derivative_along(x: float, n: int, params: MapParams) -> float:
    """log of Df^n(x) by the chain rule, summed in log space."""
    _check_unit(x)
    a = params.alpha
    terms = []
    for _ in range(n):
        terms.append(math.log1p((1.0 + a) * x ** a))
        x = map_forward(x, params)
    return math.fsum(terms)


def derivative_along(x: float, n: int, params: MapParams) -> float:
    """Df^n(x); raises OverflowError when only the log variant is representable."""
    log_value = log_derivative_along(x, n, params)
    try:
        return math.exp(log_value)
    except OverflowError:
        raise OverflowError(
            f"Df^{n} exceeds the float range; log value {log_value!r} "
            "is available from log_derivative_along"
        ) from None


def fiber_chain(y, n_max: int, params: MapParams) -> Tuple[np.ndarray, np.ndarray]:
    """Backward excursion data for base points y in J0.

    Returns (chain, entry) with chain[j] = g0^j(y) for j = 0..n_max-1 and
    entry[n-1] = g1(g0^(n-1)(y)), the point of I_n landing on y after n steps.
    Arrays have shape (n_max, len(y)).
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    chain = np.empty((n_max, y.size))
    cur = y.copy()
    for j in range(n_max):
        chain[j] = cur
        cur = solve_expansion_array(cur, params.alpha)
    entry = solve_expansion_array(chain + 1.0, params.alpha)
    return chain, entry
