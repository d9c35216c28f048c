"""Topological pressure of the original map from depth-n cylinder sums.

Cylinders of depth n are images of [0, 1] under compositions of the inverse
branches, so every quantity is produced by prepending digits to a table of
suffix data: endpoints, Birkhoff sums at the endpoints, and a bound on the
variation of S_n phi across the cylinder. For each orbit interval [u, v] the
variation of phi is at most min(TV(v) - TV(u), |phi|_{1,gamma} (v^gamma - u^gamma))
with TV the total variation function of phi.

Bracket logic: the sup-sum Z_n is submultiplicative and the inf-sum W_n is
supermultiplicative (all branches are full), so (1/n) log W_n <= P <= (1/n) log Z_n.
Both converge slowly at a neutral fixed point, so the partition bracket is
intersected with a second one from the same depth-n cylinders: the log spectral
radii of the shift transfer matrices whose weights are sup and inf of e^phi
over each depth-n cylinder. Products along paths dominate (resp. are dominated
by) the Birkhoff sums, so log rho(M_inf) <= P <= log rho(M_sup), and
Collatz-Wielandt ratios bound each spectral radius from the needed side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Optional

import numpy as np

from .errors import DepthError, DomainError
from .mp_map import MapParams, solve_expansion_array
from .potentials import PotentialSpec, TotalVariation, evaluate_array, norms

MAX_DEPTH = 24
_BLOCK_DEPTH = 16
_MATRIX_DEPTH = 20


@dataclass(frozen=True)
class PressureBracket:
    lo: float
    hi: float
    depth: int
    method: str
    estimate: Optional[float] = None

    def __post_init__(self):
        if self.lo > self.hi:
            raise DomainError(f"bracket lower end {self.lo} exceeds upper end {self.hi}")
        if self.estimate is not None and math.isfinite(self.estimate):
            # raw partition sums converge slower than the bracket; keep the point inside it
            object.__setattr__(self, "estimate", min(max(self.estimate, self.lo), self.hi))

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= value <= self.hi + slack

    def intersects(self, other: "PressureBracket", slack: float = 0.0) -> bool:
        return self.lo <= other.hi + slack and other.lo <= self.hi + slack


class _LogSum:
    """Running log of a sum of exponentials."""

    def __init__(self):
        self.shift = -math.inf
        self.total = 0.0

    def add(self, logs: np.ndarray):
        if logs.size == 0:
            return
        m = float(np.max(logs))
        if m == -math.inf:
            return
        if m > self.shift:
            self.total = self.total * math.exp(self.shift - m) if self.total else 0.0
            self.shift = m
        self.total += float(np.sum(np.exp(logs - self.shift)))

    @property
    def value(self) -> float:
        return self.shift + math.log(self.total) if self.total > 0 else -math.inf


def _seed(phi, params, y):
    """Depth-0 table: the single 'cylinder' [0, 1]."""
    state = {
        "lo": np.array([0.0]),
        "hi": np.array([1.0]),
        "s_lo": np.array([0.0]),
        "s_hi": np.array([0.0]),
        "var": np.array([0.0]),
    }
    if y is not None:
        state["pt"] = np.array([float(y)])
        state["s_pt"] = np.array([0.0])
    return state


def _prepend(state, digit, phi, semi, tv, params):
    """Table for the words digit + w from the table for the words w."""
    a = params.alpha
    off = 1.0 if digit == 1 else 0.0
    new = {}
    lo = solve_expansion_array(state["lo"] + off, a)
    hi = solve_expansion_array(state["hi"] + off, a)
    new["lo"], new["hi"] = lo, hi
    new["s_lo"] = state["s_lo"] + evaluate_array(phi, lo)
    new["s_hi"] = state["s_hi"] + evaluate_array(phi, hi)
    g = phi.gamma
    semi_var = semi * (hi ** g - lo ** g)
    new["var"] = state["var"] + np.minimum(semi_var, np.abs(tv(hi) - tv(lo)))
    if "pt" in state:
        pt = solve_expansion_array(state["pt"] + off, a)
        new["pt"] = pt
        new["s_pt"] = state["s_pt"] + evaluate_array(phi, pt)
    return new


def _concat(tables):
    return {k: np.concatenate([t[k] for t in tables]) for k in tables[0]}


def _full_table(depth, phi, semi, tv, params, y):
    state = _seed(phi, params, y)
    for _ in range(depth):
        state = _concat([_prepend(state, 0, phi, semi, tv, params), _prepend(state, 1, phi, semi, tv, params)])
    return state


def cylinder_sums(phi: PotentialSpec, n: int, params: MapParams, y: Optional[float] = None,
                  seminorm: Optional[float] = None) -> dict:
    """Log partition sums over the 2^n depth-n cylinders.

    Returns log_sup (upper bound of log Z_n), log_inf (lower bound of log W_n),
    log_endpoint (log of the sum of max endpoint values, a point-sample lower
    bound of log Z_n), and, when y is given, the tree sum and its inflated
    bounds.
    """
    if not 1 <= n <= MAX_DEPTH:
        raise DepthError(f"depth {n} outside 1..{MAX_DEPTH}")
    semi = norms(phi).seminorm if seminorm is None else seminorm
    base_depth = min(n, _BLOCK_DEPTH)
    tv = TotalVariation(phi)
    base = _full_table(base_depth, phi, semi, tv, params, y)
    sums = {k: _LogSum() for k in ("sup", "inf", "endpoint", "tree", "tree_hi", "tree_lo")}
    for prefix in product((0, 1), repeat=n - base_depth):
        table = base
        for digit in reversed(prefix):
            table = _prepend(table, digit, phi, semi, tv, params)
        mid = 0.5 * (table["s_lo"] + table["s_hi"])
        half = 0.5 * table["var"]
        sums["sup"].add(mid + half)
        sums["inf"].add(mid - half)
        sums["endpoint"].add(np.maximum(table["s_lo"], table["s_hi"]))
        if y is not None:
            sums["tree"].add(table["s_pt"])
            sums["tree_hi"].add(table["s_pt"] + table["var"])
            sums["tree_lo"].add(table["s_pt"] - table["var"])
    out = {
        "log_sup": sums["sup"].value,
        "log_inf": sums["inf"].value,
        "log_endpoint": sums["endpoint"].value,
    }
    if y is not None:
        out.update(log_tree=sums["tree"].value, log_tree_hi=sums["tree_hi"].value,
                   log_tree_lo=sums["tree_lo"].value)
    return out


def _cylinder_endpoints(depth, params):
    """Endpoints of the depth-n cylinders, indexed with the first digit as MSB."""
    lo, hi = np.array([0.0]), np.array([1.0])
    for _ in range(depth):
        lo = np.concatenate([solve_expansion_array(lo, params.alpha),
                             solve_expansion_array(lo + 1.0, params.alpha)])
        hi = np.concatenate([solve_expansion_array(hi, params.alpha),
                             solve_expansion_array(hi + 1.0, params.alpha)])
    return lo, hi


def _spectral_bounds(weights, upper, max_iter=20000, rtol=1e-12):
    """One-sided Collatz-Wielandt bound on log rho of the shift matrix.

    States are words of length n-1; the edge with index e (a word of length n)
    runs from e >> 1 to e mod 2^(n-1) with the given weight. Returns an upper
    bound of log rho when upper is True, a lower bound otherwise.
    """
    n_states = weights.size // 2
    w = weights.reshape(n_states, 2)
    targets = (np.arange(weights.size) % n_states).reshape(n_states, 2)
    v = np.ones(n_states)
    best = math.inf if upper else -math.inf
    for _ in range(max_iter):
        mv = np.sum(w * v[targets], axis=1)
        ratio = mv / v
        r_max, r_min = float(ratio.max()), float(ratio.min())
        best = min(best, math.log(r_max)) if upper else max(best, math.log(r_min))
        if r_max - r_min <= rtol * r_max:
            break
        v = mv / r_max
    return best


def _matrix_bracket(phi, n, params, semi, tv):
    depth = min(n, _MATRIX_DEPTH)
    if depth < 2:
        return -math.inf, math.inf
    lo, hi = _cylinder_endpoints(depth, params)
    f_lo, f_hi = evaluate_array(phi, lo), evaluate_array(phi, hi)
    var = np.minimum(semi * (hi ** phi.gamma - lo ** phi.gamma), np.abs(tv(hi) - tv(lo)))
    mid, half = 0.5 * (f_lo + f_hi), 0.5 * var
    upper = _spectral_bounds(np.exp(mid + half), upper=True)
    lower = _spectral_bounds(np.exp(mid - half), upper=False)
    return lower, upper


def _exact_constant(phi: PotentialSpec) -> Optional[float]:
    """phi(0) when phi is constant (no variation at all), else None."""
    if phi.c == 0.0:
        probe = np.linspace(0.0, 1.0, 17)[1:]
        if np.all(evaluate_array(phi, probe) == phi.value_at_zero):
            return float(phi.value_at_zero)
    return None


def pressure_partition(phi: PotentialSpec, n: int, params: MapParams) -> PressureBracket:
    """Bracket for P(phi) from the depth-n cylinders.

    The estimate is (1/n) log of the endpoint sup-sum; the bracket is
    [(1/n) log W_n, (1/n) log Z_n] intersected with the transfer-matrix bracket.
    """
    if not 1 <= n <= MAX_DEPTH:
        raise DepthError(f"depth {n} outside 1..{MAX_DEPTH}")
    kappa = _exact_constant(phi)
    if kappa is not None:
        # 2^n equal terms: the bracket collapses to log 2 + kappa
        value = math.log(2.0) + kappa
        return PressureBracket(value, value, n, "partition", value)
    semi = norms(phi).seminorm
    sums = cylinder_sums(phi, n, params, seminorm=semi)
    m_lo, m_hi = _matrix_bracket(phi, n, params, semi, TotalVariation(phi))
    lo = max(sums["log_inf"] / n, m_lo)
    hi = min(sums["log_sup"] / n, m_hi)
    return PressureBracket(lo, hi, n, "partition", sums["log_endpoint"] / n)


def pressure_tree(phi: PotentialSpec, y: float, n: int, params: MapParams) -> PressureBracket:
    """Preimage-tree pressure at base point y with per-cylinder inflation.

    Each preimage x_Q lies in its depth-n cylinder Q, so sup_Q and inf_Q of
    S_n phi differ from S_n phi(x_Q) by at most the variation bound of Q.
    """
    if not 0.0 < y <= 1.0:
        raise DomainError(f"base point y={y!r} must lie in (0, 1]")
    if not 1 <= n <= MAX_DEPTH:
        raise DepthError(f"depth {n} outside 1..{MAX_DEPTH}")
    kappa = _exact_constant(phi)
    if kappa is not None:
        value = math.log(2.0) + kappa
        return PressureBracket(value, value, n, "tree", value)
    sums = cylinder_sums(phi, n, params, y=y)
    return PressureBracket(sums["log_tree_lo"] / n, sums["log_tree_hi"] / n, n, "tree",
                           sums["log_tree"] / n)
