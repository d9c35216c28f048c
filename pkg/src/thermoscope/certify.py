"""Certification of phase transitions in temperature.

The pipeline decides whether the point mass at the neutral fixed point is the
unique maximizing measure. Three independent routes are tried:

1. sign information at the neutral point (gamma > alpha, or a positive leading
   coefficient, rule a transition out);
2. thresholds n0, c and m0, followed by an ergodic optimization restricted to
   [x_m0, 1]: a periodic orbit with average >= phi(0) rules a transition out,
   and a negative maximum mean cycle on the excursion graph proves one;
3. a direct search for beta and l with Z_l(beta phi, beta phi(0)) < 1.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import (DivergentTail, DomainError, GraphTooLarge, M0Overflow, NoNegativeMargin,
                     NonConvergent)
from .induced import ReturnWord, induced_model, marked_orbit, word_preimage
from .mp_map import MapParams, MarkedOrbit, solve_expansion
from .potentials import (PotentialSpec, TotalVariation, evaluate_array, grid_sup,
                         leading_coefficient, norms)
from .pressure import PressureBracket

M0_LIMIT = 2 ** 62


@dataclass(frozen=True)
class DistortionConstants:
    eps0: float
    eps1: float
    C1: float
    K: float
    D: float
    scan_horizon: int


def _series_with_tail(terms_fn, exponent_tail, n_terms):
    """Partial sum of a decreasing series plus an integral bound for the rest."""
    j = np.arange(1, n_terms + 1, dtype=float)
    return math.fsum(terms_fn(j)) + exponent_tail(float(n_terms))


def _holder_constant_df(alpha):
    """Hoelder constant of Df for the exponent min(1, alpha)."""
    if alpha <= 1.0:
        # (1 + alpha) |x^a - y^a| <= (1 + alpha) |x - y|^a, sharp at alpha = 1
        return 1.0 + alpha
    return alpha * (1.0 + alpha)


@lru_cache(maxsize=32)
def distortion_constants(params: MapParams, gamma: float, scan_horizon: int = 1000) -> DistortionConstants:
    """eps0, eps1, C1, K and D for the given map and Hoelder exponent gamma."""
    if scan_horizon < 1000:
        raise DomainError("scan_horizon must be at least 1000")
    a = params.alpha
    e = 1.0 / a + 1.0
    orbit = marked_orbit(params, scan_horizon + 1)
    xs = np.asarray(orbit.xs)
    # inf of Df^n over J_n is the product of Df(x_i), i = 2..n+1
    log_df = np.log1p((1.0 + a) * xs[2:] ** a)
    cum = np.cumsum(log_df)
    n = np.arange(1, scan_horizon + 1, dtype=float)
    eps0 = float(np.min(np.expm1(cum / e) / n))
    x1 = params.branch_point
    branch_floor = (1.0 + (1.0 + a) * x1 ** a) ** (1.0 / e) - 1.0
    eps1 = min(branch_floor, eps0)

    theta = min(1.0, a)
    p = theta * e

    def c1_terms(m):
        return (1.0 + eps1 * (m - 1.0)) ** -p  # m - 1 runs over 0, 1, ...

    def c1_tail(M):
        # terms m >= M (decreasing) are below the integral from M - 1
        return (1.0 + eps1 * (M - 1.0)) ** (1.0 - p) / (eps1 * (p - 1.0))

    s1 = _series_with_tail(c1_terms, c1_tail, 100_000)
    j0 = 1.0 - x1
    C1p = j0 ** theta * _holder_constant_df(a) * s1

    g0 = min(1.0, gamma)
    if g0 == 1.0:
        K = 1.0
    else:
        vals = (xs[1:] * (np.arange(1, xs.size) ** (1.0 / a))) ** (g0 - 1.0)
        K = max(1.0, float(np.max(vals)), a ** ((1.0 - g0) / a))
    q = 1.0 + g0 / a
    zeta = _series_with_tail(lambda j: j ** -q, lambda M: M ** (1.0 - q) / (q - 1.0), 100_000)
    D = K * gamma * eps1 ** -e * zeta
    return DistortionConstants(eps0, eps1, math.exp(C1p), K, D, scan_horizon)


# --- thresholds ------------------------------------------------------------

def _ratio_bound(phi: PotentialSpec, gamma: float, hi: float) -> float:
    """Upper bound of sup over (0, hi] of (phi(x) - phi(0)) / x^gamma."""
    if gamma == phi.gamma:
        limit = phi.c
    elif gamma < phi.gamma:
        limit = 0.0
    else:
        raise DomainError(f"gamma={gamma} exceeds the potential's own exponent {phi.gamma}")
    f = lambda x: (evaluate_array(phi, x) - phi.value_at_zero) / x ** gamma  # noqa: E731
    return grid_sup(f, 0.0, hi, limit_at_lo=limit).upper


def find_n0_and_c(phi: PotentialSpec, gamma: float, orbit: MarkedOrbit) -> Tuple[int, float]:
    """Smallest admissible n0 and the midpoint c between the ratio sup and 0."""
    a = orbit.params.alpha
    if gamma > a:
        raise DomainError(f"gamma={gamma} must not exceed alpha={a}")
    N = orbit.max_index
    xs = np.asarray(orbit.xs)
    n = np.arange(1, N + 1, dtype=float)
    ok = n * xs[1:] ** a > 1.0 / (a * 2.0 ** (a / gamma))
    bad = np.nonzero(~ok)[0]
    start = int(bad[-1]) + 2 if bad.size else 1
    if start > N:
        raise NoNegativeMargin("the marked-point lower bound fails up to the cached index")
    limit = phi.c if gamma == phi.gamma else 0.0
    if limit >= 0.0:
        # the ratio tends to its limit at 0, so no interval (0, x_n] has a negative sup
        raise NoNegativeMargin(f"ratio limit at 0 is {limit}, not negative")
    # the ratio sup over (0, x_n] can only decrease as n grows
    n0 = start
    while n0 <= N:
        sup = _ratio_bound(phi, gamma, orbit.x(n0))
        if sup < 0.0:
            return n0, 0.5 * sup
        n0 = n0 + 1 if n0 < 8 else 2 * n0
    raise NoNegativeMargin(f"ratio sup is nonnegative on (0, x_n] for every n <= {N}")


def m0_bound(phi: PotentialSpec, gamma: float, c: float, n0: int,
             constants: DistortionConstants, alpha: float) -> float:
    """log of the right-hand side of the m0 threshold."""
    if not c < 0:
        raise DomainError("c must be negative")
    if n0 < 1:
        raise DomainError("n0 must be >= 1")
    nrm = norms(phi)
    budget = constants.D * nrm.seminorm + 2.0 * n0 * nrm.sup_norm
    if gamma < alpha:
        theta = 1.0 - gamma / alpha
        inner = 2.0 * (n0 + 1) ** theta + 4.0 * alpha ** (gamma / alpha) * theta / -c * budget
        return math.log(inner) / theta
    return 2.0 * math.log(n0 + 1) + 4.0 * alpha / -c * budget


def compute_m0(phi: PotentialSpec, gamma: float, c: float, n0: int,
               constants: DistortionConstants, alpha: float) -> int:
    """Least integer strictly above the m0 threshold; M0Overflow past 2^62."""
    log_bound = m0_bound(phi, gamma, c, n0, constants, alpha)
    if log_bound >= math.log(M0_LIMIT):
        raise M0Overflow(f"m0 threshold exp({log_bound:.6g}) exceeds 2^62", log_bound)
    return math.floor(math.exp(log_bound)) + 1


# --- periodic orbits -------------------------------------------------------

@dataclass(frozen=True)
class PeriodicOrbit:
    return_word: Optional[ReturnWord]
    point: float
    period: int
    averages: Dict[str, float] = field(default_factory=dict)
    points: Tuple[float, ...] = field(default=(), repr=False)

    @property
    def is_neutral(self) -> bool:
        return self.return_word is None


def neutral_orbit(potentials: Optional[Dict[str, PotentialSpec]] = None) -> PeriodicOrbit:
    """The fixed point 0, carrying the point mass at the neutral fixed point."""
    avg = {k: float(v.value_at_zero) for k, v in (potentials or {}).items()}
    return PeriodicOrbit(None, 0.0, 1, avg, (0.0,))


def _is_lyndon(word):
    n = len(word)
    return all(word < word[i:] + word[:i] for i in range(1, n))


def lyndon_words(max_total: int, cap: int):
    """Primitive return words up to rotation, as their least rotations."""
    out = []

    def extend(prefix, total):
        if prefix and _is_lyndon(prefix):
            out.append(prefix)
        for t in range(1, min(cap, max_total - total) + 1):
            extend(prefix + (t,), total + t)

    extend((), 0)
    return sorted(out, key=lambda w: (sum(w), w))


def _orbit_points(y, word, params):
    """All points of the periodic orbit through y, built from backward chains."""
    pts = []
    for n in reversed(word.times):
        t = y
        chain = []
        for _ in range(n - 1):
            t = solve_expansion(t, params.alpha, params.solver_tol)
            chain.append(t)
        y = solve_expansion(t + 1.0, params.alpha, params.solver_tol)
        pts.extend(chain)
        pts.append(y)
    return pts


def periodic_point(word: ReturnWord, params: MapParams) -> float:
    """Fixed point in J0 of the composition of return branches, by bisection."""
    x1 = params.branch_point
    lo, hi = x1, 1.0
    # g_w(y) - y is positive near x1 and nonpositive at 1; g_w contracts
    if word_preimage(1.0, word, params) >= 1.0:
        return 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if word_preimage(mid, word, params) > mid:
            lo = mid
        else:
            hi = mid
    return hi


def enumerate_periodic_orbits(max_total_period: int, params: MapParams,
                              max_return_time: Optional[int] = None,
                              region_floor: Optional[float] = None,
                              potentials: Optional[Dict[str, PotentialSpec]] = None) -> List[PeriodicOrbit]:
    """Periodic orbits through J0 with total period at most max_total_period."""
    if max_total_period < 1:
        raise DomainError("max_total_period must be >= 1")
    cap = max_total_period if max_return_time is None else max_return_time
    potentials = potentials or {}
    orbits = []
    for times in lyndon_words(max_total_period, cap):
        word = ReturnWord(times)
        y = periodic_point(word, params)
        pts = _orbit_points(y, word, params)
        if region_floor is not None and min(pts) < region_floor:
            continue
        arr = np.array(pts)
        avg = {k: math.fsum(evaluate_array(v, arr)) / arr.size for k, v in potentials.items()}
        orbits.append(PeriodicOrbit(word, y, word.total_time, avg, tuple(pts)))
    return orbits


# --- maximum mean cycle --------------------------------------------------

def max_mean_cycle(n_nodes: int, src: np.ndarray, dst: np.ndarray, weight: np.ndarray) -> float:
    """Karp's maximum cycle mean, with O(V) memory by running the recursion twice."""
    order = np.argsort(dst, kind="stable")
    src, dst, weight = src[order], dst[order], weight[order]
    heads, starts = np.unique(dst, return_index=True)

    def step(d):
        cand = d[src] + weight
        out = np.full(n_nodes, -np.inf)
        out[heads] = np.maximum.reduceat(cand, starts)
        return out

    d = np.zeros(n_nodes)
    for _ in range(n_nodes):
        d = step(d)
    d_final = d
    best = np.full(n_nodes, np.inf)
    d = np.zeros(n_nodes)
    with np.errstate(invalid="ignore"):
        for k in range(n_nodes):
            ratio = (d_final - d) / (n_nodes - k)
            ratio = np.where(np.isfinite(d), ratio, np.inf)
            best = np.minimum(best, ratio)
            d = step(d)
    best = best[np.isfinite(d_final)]
    return float(np.max(best)) if best.size else -math.inf


NODE_BUDGET = 1 << 13


def excursion_graph(phi: PotentialSpec, m0: int, depth: int, params: MapParams):
    """(n_nodes, src, dst, weight) of the excursion graph restricted to [x_m0, 1]."""
    n_cells = 1 << depth
    if n_cells + m0 > NODE_BUDGET:
        feasible = int(math.floor(math.log2(max(NODE_BUDGET - m0, 1))))
        raise GraphTooLarge(f"{n_cells} cells plus {m0} levels exceed {NODE_BUDGET} nodes",
                            feasible if NODE_BUDGET - m0 >= 2 else None)
    a = params.alpha
    x1 = params.branch_point
    orbit = marked_orbit(params, m0 + 1)
    xs = np.asarray(orbit.xs)
    tv = TotalVariation(phi)
    semi = norms(phi).seminorm

    def sup_on(lo, hi):
        f_lo, f_hi = evaluate_array(phi, lo), evaluate_array(phi, hi)
        var = np.minimum(semi * np.abs(hi ** phi.gamma - lo ** phi.gamma), np.abs(tv(hi) - tv(lo)))
        return 0.5 * (f_lo + f_hi + var)

    cells = np.linspace(x1, 1.0, n_cells + 1)
    level = lambda n: n_cells + n - 1  # noqa: E731  J_n for 1 <= n <= m0 - 1
    point = n_cells + m0 - 1
    n_nodes = n_cells + m0
    w = np.empty(n_nodes)
    w[:n_cells] = sup_on(cells[:-1], cells[1:])
    lv = np.arange(1, m0)
    w[n_cells:point] = sup_on(xs[lv + 1], xs[lv])
    w[point] = float(evaluate_array(phi, xs[m0 : m0 + 1])[0])

    src, dst = [], []
    # descent J_n -> J_(n-1), the point x_m0 -> J_(m0-1), J_1 -> every cell
    for n in range(2, m0):
        src.append(level(n)); dst.append(level(n - 1))
    src.append(point); dst.append(level(m0 - 1) if m0 >= 2 else 0)
    src.extend([level(1)] * n_cells); dst.extend(range(n_cells))
    # branching out of J0: f(A) = [u(a) - 1, u(b) - 1]
    img_lo = np.maximum(cells[:-1] + cells[:-1] ** (1.0 + a) - 1.0, 0.0)
    img_hi = cells[1:] + cells[1:] ** (1.0 + a) - 1.0
    img_lo[0] = 0.0
    x_m0 = xs[m0]
    for i in range(n_cells):
        lo, hi = max(img_lo[i], x_m0), img_hi[i]
        if hi < lo:
            continue
        # J0 cells meeting [lo, hi]
        if hi >= x1:
            first = int(np.clip(np.searchsorted(cells, max(lo, x1), side="right") - 1, 0, n_cells - 1))
            last = int(np.clip(np.searchsorted(cells, hi, side="right") - 1, 0, n_cells - 1))
            src.extend([i] * (last - first + 1)); dst.extend(range(first, last + 1))
        # levels J_n = [x_(n+1), x_n] meeting [lo, hi], n <= m0 - 1
        if lo <= x1:
            met = lv[(xs[lv + 1] <= hi) & (xs[lv] >= lo)]
            src.extend([i] * met.size); dst.extend((n_cells + met - 1).tolist())
            if lo <= x_m0 <= hi:
                src.append(i); dst.append(point)
    src = np.array(src, dtype=np.int64)
    dst = np.array(dst, dtype=np.int64)
    return n_nodes, src, dst, w[src]


def compact_sup(phi: PotentialSpec, m0: int, graph_depth: int, params: MapParams,
                orbit_period: int = 12) -> Tuple[float, float]:
    """(eta_lower, eta_upper) around sup of integral phi - phi(0) over measures on [x_m0, 1]."""
    if m0 < 2:
        raise DomainError("m0 must be >= 2")
    n_nodes, src, dst, w = excursion_graph(phi, m0, graph_depth, params)
    upper = max_mean_cycle(n_nodes, src, dst, w) - phi.value_at_zero
    floor = marked_orbit(params, m0 + 1).x(m0)
    orbits = enumerate_periodic_orbits(orbit_period, params, region_floor=floor,
                                       potentials={"phi": phi})
    lower = max(o.averages["phi"] for o in orbits) - phi.value_at_zero
    return lower, upper


def best_orbit(phi: PotentialSpec, params: MapParams, max_period: int,
               floor: Optional[float] = None) -> PeriodicOrbit:
    orbits = enumerate_periodic_orbits(max_period, params, region_floor=floor,
                                       potentials={"phi": phi})
    return max(orbits, key=lambda o: o.averages["phi"])


# --- verdicts --------------------------------------------------------------

@dataclass(frozen=True)
class CertifyBudgets:
    scan_horizon: int = 1000
    m0_cap: int = 1024
    graph_depth: int = 9
    orbit_period: int = 10
    beta_max: float = 4096.0
    ell_max: int = 2
    n_max: int = 2000


@dataclass
class TransitionCertificate:
    potential: str
    alpha: float
    gamma: float
    verdict: str
    route: Optional[str] = None
    c: Optional[float] = None
    n0: Optional[int] = None
    theta: Optional[float] = None
    m0: Optional[int] = None
    m0_log_bound: Optional[float] = None
    m0_used: Optional[int] = None
    eta_lower: Optional[float] = None
    eta_upper: Optional[float] = None
    witness: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def to_dict(self, with_timings: bool = True) -> dict:
        d = asdict(self)
        if not with_timings:
            d.pop("timings")
        return d

    def to_json(self, with_timings: bool = True) -> str:
        return json.dumps(self.to_dict(with_timings), sort_keys=True, default=str)


def fast_path(phi: PotentialSpec, params: MapParams, budgets: CertifyBudgets):
    """Search beta, l with a certified Z_l(beta phi, beta phi(0)) < 1."""
    model = induced_model(phi, params, budgets.n_max)
    tried = []
    beta = 1.0
    while beta <= budgets.beta_max:
        p = beta * phi.value_at_zero
        for ell in range(1, budgets.ell_max + 1):
            try:
                _, z_hi = model.z_bounds(beta, p, ell)
            except DivergentTail as exc:
                tried.append({"beta": beta, "ell": ell, "divergent": str(exc)})
                break
            tried.append({"beta": beta, "ell": ell, "log_z_upper": z_hi})
            if z_hi < 0.0:
                return {"beta": beta, "ell": ell, "log_z_upper": z_hi}, tried
        beta *= 2.0
    return None, tried


def certify_transition(phi: PotentialSpec, gamma: Optional[float], params: MapParams,
                       budgets: Optional[CertifyBudgets] = None) -> TransitionCertificate:
    budgets = budgets or CertifyBudgets()
    gamma = phi.gamma if gamma is None else float(gamma)
    a = params.alpha
    cert = TransitionCertificate(phi.name or "custom", a, gamma, "Undetermined",
                                 budgets=asdict(budgets))
    clock = time.perf_counter()

    def lap(name):
        nonlocal clock
        now = time.perf_counter()
        cert.timings[name] = now - clock
        clock = now

    # (a) sign information at the neutral point
    if gamma > a:
        cert.verdict, cert.route = "CertifiedNoTransition", "gamma_exceeds_alpha"
        cert.witness = {"reason": "gamma > alpha: the induced sum at p = beta phi(0) diverges for every beta"}
        return cert
    try:
        lead = leading_coefficient(phi, gamma)
        cert.diagnostics["leading_coefficient"] = [lead.value, lead.error_bar]
        if lead.value - lead.error_bar > 0.0:
            cert.verdict, cert.route = "CertifiedNoTransition", "positive_leading_coefficient"
            cert.witness = {"reason": "leading coefficient > 0", "value": lead.value}
            return cert
    except NonConvergent as exc:
        cert.diagnostics["leading_coefficient"] = str(exc)
    lap("leading_coefficient")

    # (b) thresholds and restricted ergodic optimization
    orbit = marked_orbit(params, 100_000)
    try:
        n0, c = find_n0_and_c(phi, gamma, orbit)
        cert.n0, cert.c, cert.theta = n0, c, 1.0 - gamma / a
        const = distortion_constants(params, gamma, budgets.scan_horizon)
        try:
            m0 = compute_m0(phi, gamma, c, n0, const, a)
            cert.m0 = m0
            cert.m0_log_bound = math.log(m0)
        except M0Overflow as exc:
            m0 = None
            cert.m0_log_bound = exc.log_bound
        m0_used = budgets.m0_cap if m0 is None else min(m0, budgets.m0_cap)
        m0_used = max(m0_used, n0 + 1, 2)
        cert.m0_used = m0_used
        lap("thresholds")
        depth = budgets.graph_depth
        while True:
            try:
                lower, upper = compact_sup(phi, m0_used, depth, params, budgets.orbit_period)
                break
            except GraphTooLarge as exc:
                if exc.max_feasible_depth is None or exc.max_feasible_depth >= depth:
                    raise
                depth = exc.max_feasible_depth
        cert.eta_lower, cert.eta_upper = lower, upper
        cert.diagnostics["graph_depth"] = depth
        lap("compact_sup")
        if lower >= 0.0:
            w = best_orbit(phi, params, budgets.orbit_period, marked_orbit(params, m0_used + 1).x(m0_used))
            cert.verdict, cert.route = "CertifiedNoTransition", "orbit_witness"
            cert.witness = {"reason": "periodic orbit with average >= phi(0)",
                            "return_word": list(w.return_word.times), "point": w.point,
                            "period": w.period, "average": w.averages["phi"]}
            return cert
        if upper < 0.0 and m0 is not None and m0 <= m0_used:
            cert.verdict, cert.route = "CertifiedTransition", "compact_optimization"
            cert.witness = {"reason": "maximum mean cycle below phi(0) on [x_m0, 1]",
                            "eta_upper": upper}
            return cert
    except (NoNegativeMargin, NonConvergent, DomainError, GraphTooLarge) as exc:
        cert.diagnostics["thresholds"] = f"{type(exc).__name__}: {exc}"

    # (c) direct route through the induced partition function
    found, tried = fast_path(phi, params, budgets)
    cert.diagnostics["fast_path"] = tried
    lap("fast_path")
    if found is not None:
        cert.verdict, cert.route = "CertifiedTransition", "partition_function_below_one"
        cert.witness = dict(found, reason="Z_l(beta phi, beta phi(0)) < 1")
    return cert


@dataclass(frozen=True)
class KeyLemmaReport:
    holds: Optional[bool]
    margin: float
    max_average: float
    pressure_lo: float


def key_lemma_check(phi: PotentialSpec, orbits: List[PeriodicOrbit], pressure: PressureBracket,
                    key: str = "phi") -> KeyLemmaReport:
    """Compare the pressure with the best orbit average (orbits must avoid 0)."""
    if any(o.is_neutral for o in orbits):
        raise DomainError("orbits must exclude the neutral fixed point")
    if not orbits:
        raise DomainError("no orbits supplied")
    best = -math.inf
    for o in orbits:
        if key in o.averages:
            avg = o.averages[key]
        else:
            avg = math.fsum(evaluate_array(phi, np.array(o.points))) / o.period
        best = max(best, avg)
    margin = pressure.lo - best
    return KeyLemmaReport(True if margin > 0 else None, margin, best, pressure.lo)
