"""Pressure as the root in p of the two-variable pressure, and the temperature scan.

P(phi) = inf{p : two-variable pressure(phi, p) <= 0}. The two-variable
pressure is decreasing in p, so a certified sign at each end of a p-interval
brackets P(phi). The same sign test at p = beta phi(0) tells whether
P(beta phi) > beta phi(0), which locates the transition in beta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import DivergentTail, DomainError, Inconclusive
from .induced import InducedModel, induced_model
from .mp_map import MapParams
from .potentials import PotentialSpec
from .pressure import PressureBracket, pressure_partition


def _sign(model: InducedModel, p: float, beta: float, ell_max: int):
    """(sign, point or None, note); sign 0 means the bracket straddles 0."""
    try:
        pt = model.point(p, beta, ell_max)
    except DivergentTail as exc:
        return 0, None, f"uncertified tail: {exc}"
    return pt.sign, pt, None


def pressure_bowen(phi: PotentialSpec, params: MapParams,
                   p_bracket: Optional[Tuple[float, float]] = None, ell_max: int = 2,
                   n_max: int = 2000, tol: float = 1e-6, max_expand: int = 40) -> PressureBracket:
    """Bracket for P(phi) by bisection on the sign of the two-variable pressure.

    Without an initial interval the depth-10 partition bracket, widened by
    1e-3, is used. Ends that fail the sign requirement are pushed outward by
    doubling steps. Bisection stops at width tol or at the first inconclusive
    sign, returning the last conclusive interval.
    """
    model = induced_model(phi, params, n_max)
    if p_bracket is None:
        b = pressure_partition(phi, 10, params)
        p_lo, p_hi = b.lo - 1e-3, b.hi + 1e-3
    else:
        p_lo, p_hi = map(float, p_bracket)
        if not p_lo < p_hi:
            raise DomainError("p_bracket must be an increasing pair")
    step = p_hi - p_lo
    for _ in range(max_expand):
        if _sign(model, p_lo, 1.0, ell_max)[0] == 1:
            break
        p_lo -= step
        step *= 2.0
    else:
        raise Inconclusive(f"no certified positive sign found down to p={p_lo}")
    step = p_hi - p_lo
    for _ in range(max_expand):
        if _sign(model, p_hi, 1.0, ell_max)[0] == -1:
            break
        p_hi += step
        step *= 2.0
    else:
        raise Inconclusive(f"no certified nonpositive sign found up to p={p_hi}")
    while p_hi - p_lo > tol:
        mid = 0.5 * (p_lo + p_hi)
        if mid in (p_lo, p_hi):
            break
        s = _sign(model, mid, 1.0, ell_max)[0]
        if s == 1:
            p_lo = mid
        elif s == -1:
            p_hi = mid
        else:
            break
    return PressureBracket(p_lo, p_hi, ell_max, "bowen", 0.5 * (p_lo + p_hi))


@dataclass(frozen=True)
class SignDatum:
    beta: float
    sign: int
    lo: float
    hi: float
    divergent: bool = False
    note: Optional[str] = None


@dataclass(frozen=True)
class TransitionScanResult:
    phi: PotentialSpec = field(repr=False)
    beta_grid: Tuple[float, ...]
    sign_data: Tuple[SignDatum, ...]
    beta_star: Optional[Tuple[float, float]]
    verdict: str
    witness: Optional[dict] = None


def _datum(model, beta, ell_max):
    p = beta * model.phi.value_at_zero
    s, pt, note = _sign(model, p, beta, ell_max)
    if pt is None:
        return SignDatum(beta, 0, -math.inf, math.inf, False, note), None
    if pt.divergence_flag:
        return SignDatum(beta, 1, math.inf, math.inf, True, pt.witness.get("reason")), pt.witness
    return SignDatum(beta, s, pt.bracket.lo, pt.bracket.hi), None


def parse_beta_range(text: str) -> Tuple[float, float, int]:
    """'lo:hi:count' with 0 < lo < hi and 2 <= count <= 10^4."""
    parts = text.split(":")
    if len(parts) != 3:
        raise DomainError(f"beta range {text!r} is not of the form lo:hi:count")
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    if not (0 < lo < hi and math.isfinite(hi)):
        raise DomainError(f"beta range needs 0 < lo < hi, got {lo}, {hi}")
    if not 2 <= count <= 10_000:
        raise DomainError(f"beta count must lie in 2..10000, got {count}")
    return lo, hi, count


def transition_scan(phi: PotentialSpec, params: MapParams, beta_range: Tuple[float, float],
                    grid_size: int = 16, ell_max: int = 2, n_max: int = 2000) -> TransitionScanResult:
    """Sign of the two-variable pressure at p = beta phi(0) on a beta grid, then bisection."""
    b_lo, b_hi = map(float, beta_range)
    if not 0 < b_lo < b_hi:
        raise DomainError("beta_range must satisfy 0 < lo < hi")
    if not 2 <= grid_size <= 10_000:
        raise DomainError("grid_size must lie in 2..10000")
    model = induced_model(phi, params, n_max)
    grid = [float(b) for b in np.linspace(b_lo, b_hi, grid_size)]
    data: List[SignDatum] = []
    witness = None
    for beta in grid:
        d, w = _datum(model, beta, ell_max)
        data.append(d)
        witness = witness or w
    if all(d.divergent for d in data):
        return TransitionScanResult(phi, tuple(grid), tuple(data), None, "DivergentEverywhere", witness)
    pos = [i for i, d in enumerate(data) if d.sign == 1]
    neg = [i for i, d in enumerate(data) if d.sign == -1]
    if not pos or not neg or min(neg) < max(pos):
        # a missing side, or an order that breaks the positive-then-nonpositive pattern
        return TransitionScanResult(phi, tuple(grid), tuple(data), None, "NoSignChangeInRange", witness)
    lo, hi = grid[max(pos)], grid[min(neg)]
    target = (b_hi - b_lo) / grid_size / 8.0
    extra = []
    # points with an inconclusive sign form a window [u_lo, u_hi]; keep
    # closing in on it from whichever side leaves the larger gap
    u_lo = u_hi = None
    for _ in range(64):
        if hi - lo <= target:
            break
        if u_lo is None:
            probe = 0.5 * (lo + hi)
        elif u_lo - lo >= hi - u_hi:
            probe = 0.5 * (lo + u_lo)
        else:
            probe = 0.5 * (u_hi + hi)
        if probe in (lo, hi, u_lo, u_hi):
            break
        d, _ = _datum(model, probe, ell_max)
        extra.append(d)
        if d.sign == 1:
            lo = probe
        elif d.sign == -1:
            hi = probe
        else:
            u_lo = probe if u_lo is None else min(u_lo, probe)
            u_hi = probe if u_hi is None else max(u_hi, probe)
    data = sorted(data + extra, key=lambda d: d.beta)
    return TransitionScanResult(phi, tuple(grid), tuple(data), (lo, hi), "TransitionLocated", witness)
