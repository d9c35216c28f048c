"""First-return system on J0 = (x1, 1] and the two-variable pressure.

The return time is n on I_n = (y_(n+1), y_n] and on J_n = (x_(n+1), x_n]. The
inverse branch of the return map onto I_n is g_n = g1 o g0^(n-1), so every
Birkhoff sum along a return is a sum over the backward chain
g0(y), g0^2(y), ..., g0^(n-1)(y) plus the entry point g_n(y).

Two rigorous brackets for the growth rate of the induced partition functions
are produced and intersected:

* the partition-function bracket, from upper and lower bounds of Z_l obtained by a
  recursion over the first letter and the block I_m containing the image of
  the remaining word, with lower end shifted by the distortion constant;
* a Collatz-Wielandt bracket for the transfer operator discretised on cells
  of J0: if the cell operator built from sup weights satisfies M U <= lam U for
  a positive step function U then L h <= lam h pointwise for the same h, and
  similarly from below with inf weights.

Truncation at N_max return steps is closed by an explicit tail bound using
x_j^(-alpha) increments between alpha (1 - (alpha+1) x_N^alpha / 2) and alpha.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.special import gammaincc, gammaln

from .errors import DivergentTail, DomainError, IndexRangeError, SolverFailure
from .mp_map import MapParams, MarkedOrbit, build_marked_orbit, solve_expansion, solve_expansion_array
from .potentials import PotentialSpec, TotalVariation, evaluate_array, norms, ratio_inf, ratio_sup
from .pressure import PressureBracket

DEFAULT_CELLS = 384
DEFAULT_BLOCKS = 48


@dataclass(frozen=True)
class ReturnWord:
    times: Tuple[int, ...]

    def __post_init__(self):
        times = tuple(int(t) for t in self.times)
        if not times or min(times) < 1:
            raise DomainError(f"return times must be positive integers, got {self.times!r}")
        object.__setattr__(self, "times", times)

    @property
    def total_time(self) -> int:
        return sum(self.times)

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class TwoVarPressurePoint:
    phi: PotentialSpec = field(repr=False)
    p: float
    bracket: PressureBracket
    ell: int
    truncation: int
    tail_bound: float
    divergence_flag: bool = False
    witness: Optional[dict] = None
    operator_bracket: Optional[Tuple[float, float]] = None
    z_bracket: Optional[Tuple[float, float]] = None

    @property
    def sign(self) -> int:
        """+1, -1 (meaning <= 0) or 0 when the bracket straddles 0."""
        if self.divergence_flag or self.bracket.lo > 0.0:
            return 1
        if self.bracket.hi <= 0.0:
            return -1
        return 0


# --- return times and preimages -------------------------------------------

@lru_cache(maxsize=16)
def marked_orbit(params: MapParams, n: int) -> MarkedOrbit:
    return build_marked_orbit(params, n)


def return_time(x: float, orbit: MarkedOrbit) -> int:
    """First-return time to J0 of a point in (0, 1]."""
    if not 0.0 < x <= 1.0:
        raise DomainError(f"x={x!r} must lie in (0, 1]")
    x1 = orbit.x(1)
    if x > x1:
        # ys is decreasing: y_n = ys[n-1]; find n with y_(n+1) < x <= y_n
        ys = orbit.ys
        k = int(np.searchsorted(-ys, -x, side="right"))
        n = k
        if n >= len(ys):
            raise IndexRangeError(f"return time of {x!r} exceeds cached index {len(ys) - 1}")
        return n
    xs = orbit.xs
    n = int(np.searchsorted(-xs, -x, side="right")) - 1
    if n >= orbit.max_index:
        raise IndexRangeError(f"return time of {x!r} exceeds cached index {orbit.max_index - 1}")
    return n


def return_preimage(y: float, n: int, params: MapParams) -> float:
    """The point of I_n mapped onto y by f^n."""
    x1 = params.branch_point
    if not x1 < y <= 1.0:
        raise DomainError(f"y={y!r} must lie in J0 = ({x1}, 1]")
    if n < 1:
        raise DomainError("return time must be >= 1")
    t = y
    for _ in range(n - 1):
        t = solve_expansion(t, params.alpha, params.solver_tol)
    if t <= 0.0:
        raise SolverFailure(f"backward chain of {y!r} underflowed before step {n}")
    return solve_expansion(t + 1.0, params.alpha, params.solver_tol)


def word_preimage(y: float, word: ReturnWord, params: MapParams) -> float:
    """g_(n1) o ... o g_(nl)(y): the point of the word's cylinder mapped onto y."""
    for n in reversed(word.times):
        y = return_preimage(y, n, params)
    return y


# --- truncation tails ------------------------------------------------------

@dataclass(frozen=True)
class _TailData:
    """y-independent ingredients of the tail bound beyond N return steps."""

    N: int
    alpha: float
    s: float  # gamma / alpha
    x_N: float
    X_N: float  # x_N^(-alpha)
    X_N1: float  # x_(N+1)^(-alpha)
    alpha_low: float  # lower bound of x_j^(-alpha) increments for j >= N
    kappa_hi: float  # sup of (phi - phi(0)) / x^gamma on (0, x_N]
    kappa_lo: float
    entry_hi: float  # sup of phi over (x1, y_(N+1)]
    entry_lo: float
    phi0: float


def _log_tail_factor(td: _TailData, beta: float, q: float) -> float:
    """log of an upper bound for sum over m >= 1 of exp(-m q + beta kappa R_m).

    R_m is the sum of x_j^gamma over the m extra chain points. The result is
    combined with the base weight at step N by the caller. Raises DivergentTail.
    """
    kap = beta * td.kappa_hi
    s, a = td.s, td.alpha
    if q < 0.0:
        raise DivergentTail(
            "p is below beta phi(0): tail terms grow geometrically",
            certified=True, witness={"reason": "terms grow", "q": q},
        )
    candidates = []
    if kap <= 0.0:
        if q > 0.0:
            candidates.append(-math.log(math.expm1(q)))
        if kap < 0.0:
            b = -kap
            X = td.X_N1
            if s < 1.0:
                # integral of exp(-b I(t)) dt with I the power integral: an
                # incomplete gamma function after substituting u = (X + a t)^(1-s)
                k = 1.0 / (1.0 - s)
                c = b / (a * (1.0 - s))
                u0 = X ** (1.0 - s)
                z = c * u0
                if z > 2.0 * k + 50.0:
                    # Gamma(k, z) <= z^(k-1) e^-z / (1 - (k-1)/z)
                    log_g = (k - 1.0) * math.log(z) - z - math.log1p(-(k - 1.0) / z)
                else:
                    log_g = gammaln(k) + math.log(gammaincc(k, z))
                candidates.append(z + log_g - k * math.log(c) - math.log(a * (1.0 - s)))
            elif s == 1.0 and b / a > 1.0:
                candidates.append(math.log(X / (b - a)))
    else:
        # growth from a positive ratio is at most kap x_N^gamma per step
        xg = td.x_N ** (s * a)
        slope = q - kap * xg
        if slope > 0.0:
            candidates.append(kap * xg - math.log(math.expm1(slope)))
        elif q > 0.0:
            # sum the bound explicitly until the per-step growth is below q/2
            X = td.X_N
            a_lo = td.alpha_low
            M = int(math.ceil(((2.0 * kap / q) ** (1.0 / s) - X) / a_lo)) + 1
            if M > 10_000_000:
                raise DivergentTail("tail bound needs more than 1e7 explicit terms")
            m = np.arange(1, M + 1, dtype=float)
            t = m - 1.0
            if s == 1.0:
                integ = np.log1p(a_lo * t / X) / a_lo
            else:
                integ = ((X + a_lo * t) ** (1.0 - s) - X ** (1.0 - s)) / (a_lo * (1.0 - s))
            logs = -m * q + kap * (X ** -s + integ)
            top = float(np.max(logs))
            head = top + math.log(float(np.sum(np.exp(logs - top))))
            rest = float(logs[-1]) - math.log(math.expm1(0.5 * q))
            candidates.append(float(np.logaddexp(head, rest)))
    if candidates:
        return min(candidates)
    _certify_divergence(td, beta, q)
    raise DivergentTail(
        "comparison series for the tail does not converge; divergence not certified",
        certified=False, witness={"kappa_hi": kap, "s": s, "q": q},
    )


def _certify_divergence(td: _TailData, beta: float, q: float):
    """Raise a certified DivergentTail when the terms provably do not decay."""
    kap = beta * td.kappa_lo
    s = td.s
    if q != 0.0:
        return
    if kap >= 0.0 or s > 1.0:
        raise DivergentTail(
            "terms bounded below: every tail term exceeds a fixed positive constant",
            certified=True,
            witness={"reason": "terms bounded below", "kappa_lo": kap, "s": s},
        )
    if s == 1.0 and -kap / td.alpha_low <= 1.0:
        raise DivergentTail(
            "tail terms dominate a divergent power series",
            certified=True,
            witness={"reason": "power-law comparison", "exponent": -kap / td.alpha_low},
        )


# --- cell model -----------------------------------------------------------

def _variation(phi, semi, tv, lo, hi):
    g = phi.gamma
    return np.minimum(semi * np.abs(hi ** g - lo ** g), np.abs(tv(hi) - tv(lo)))


def _sparse_table(values, op):
    table = [values]
    k = 1
    while 2 * k <= values.size:
        prev = table[-1]
        table.append(op(prev[:-k], prev[k:]))
        k *= 2
    return table


def _range_query(table, op, lo, hi):
    """op over values[lo..hi] inclusive, vectorised."""
    length = hi - lo + 1
    level = np.floor(np.log2(length)).astype(int)
    out = np.empty(lo.shape)
    for k in np.unique(level):
        mask = level == k
        t = table[k]
        out[mask] = op(t[lo[mask]], t[hi[mask] - (1 << k) + 1])
    return out


class InducedModel:
    """Induced-system data for one potential, reusable across p and scalings beta > 0.

    All Birkhoff sums, variations and ratio bounds scale linearly with beta,
    so they are stored for beta = 1 and scaled on demand.
    """

    def __init__(self, phi: PotentialSpec, params: MapParams, n_max: int = 10_000,
                 cells: int = DEFAULT_CELLS, blocks: int = DEFAULT_BLOCKS):
        if n_max < 1:
            raise DomainError("N_max must be >= 1")
        self.phi = phi
        self.params = params
        self.N = N = int(n_max)
        a = params.alpha
        orbit = marked_orbit(params, N + 2)
        x1 = params.branch_point
        K = min(blocks, N)
        self.K = K
        nrm = norms(phi)
        self.norms = nrm
        semi = nrm.seminorm
        tv = TotalVariation(phi)

        # cell boundaries: block points y_1..y_(K+1), x1, and a uniform grid
        ys = orbit.ys[: K + 1]
        grid = np.linspace(x1, 1.0, cells + 1)
        bounds = np.unique(np.concatenate((grid, ys, [x1])))
        self.bounds = bounds
        n_cells = bounds.size - 1
        self.n_cells = n_cells
        # block of a cell: I_b for its upper end in (y_(b+1), y_b], else K+1
        upper = bounds[1:]
        self.cell_block = np.minimum(np.searchsorted(-orbit.ys[: K + 1], -upper, side="right"), K + 1) - 1

        # walk the backward chains from every cell endpoint
        chain = bounds.copy()
        run = np.zeros_like(bounds)  # sum of phi over chain points 1..n-1
        run_var = np.zeros(n_cells)
        s_end = np.empty((N, bounds.size))
        var = np.empty((N, n_cells))
        entry = np.empty((N, bounds.size))
        for n in range(1, N + 1):
            e = solve_expansion_array(chain + 1.0, a)
            entry[n - 1] = e
            s_end[n - 1] = run + evaluate_array(phi, e)
            var[n - 1] = run_var + _variation(phi, semi, tv, e[:-1], e[1:])
            chain = solve_expansion_array(chain, a)
            run = run + evaluate_array(phi, chain)
            run_var = run_var + _variation(phi, semi, tv, chain[:-1], chain[1:])
        # after the loop chain = g0^N(bounds), run = sum over chain points 1..N
        mid = 0.5 * (s_end[:, :-1] + s_end[:, 1:])
        self.log_up = mid + 0.5 * var  # shape (N, cells), beta = 1, p = 0
        self.log_lo = mid - 0.5 * var
        # tail base: sum over chain points 1..N-1 plus the entry term
        run_prev = run - evaluate_array(phi, chain)
        base_mid = 0.5 * (run_prev[:-1] + run_prev[1:])
        base_var = run_var - _variation(phi, semi, tv, chain[:-1], chain[1:])
        self.base_up = base_mid + 0.5 * base_var
        self.base_lo = base_mid - 0.5 * base_var

        # targets: cells met by g_n(cell) = [entry(a), entry(b)]
        tlo = np.clip(np.searchsorted(bounds, entry[:, :-1], side="right") - 1, 0, n_cells - 1)
        thi = np.clip(np.searchsorted(bounds, entry[:, 1:], side="left") - 1, 0, n_cells - 1)
        self._compress(tlo, thi)
        y_tail = orbit.y(N + 1)
        self.tail_targets = (0, int(np.clip(np.searchsorted(bounds, y_tail, side="left") - 1, 0, n_cells - 1)))

        self.tail = _tail_for(phi, params, N, orbit, nrm, tv)
        # block extremes for the partition-function recursion; blocks run from
        # I_1 (cells at the top of J0) down to the lumped block near x1
        order = np.arange(n_cells)[::-1]
        blk = self.cell_block[order]
        starts = np.concatenate(([0], np.nonzero(np.diff(blk))[0] + 1))
        self.block_ids = blk[starts]
        self.block_up = np.maximum.reduceat(self.log_up[:, order], starts, axis=1)
        self.block_lo = np.minimum.reduceat(self.log_lo[:, order], starts, axis=1)
        self.block_base_up = np.maximum.reduceat(self.base_up[order], starts)

    def _compress(self, tlo, thi):
        """Run-length encode consecutive n with identical target ranges, per cell."""
        N, C = tlo.shape
        key = tlo.T * C + thi.T  # (cells, N)
        change = np.ones_like(key, dtype=bool)
        change[:, 1:] = key[:, 1:] != key[:, :-1]
        cell_idx, n_idx = np.nonzero(change)
        self.run_cell = cell_idx
        self.run_start = cell_idx * N + n_idx  # offsets into the flattened (cells, N) array
        self.run_tlo = tlo.T[cell_idx, n_idx]
        self.run_thi = thi.T[cell_idx, n_idx]

    # -- weights -----------------------------------------------------------

    def _check_beta(self, beta):
        if not beta > 0:
            raise DomainError(f"beta must be positive, got {beta!r}")

    def log_tail(self, beta: float, p: float) -> float:
        """log of the y-independent tail factor; add the per-cell base for the bound."""
        td = self.tail
        q = p - beta * td.phi0
        return _log_tail_factor(td, beta, q)

    def tail_bounds(self, beta: float, p: float) -> np.ndarray:
        """Upper bound, per cell, of the sum of sup weights beyond N return steps."""
        td = self.tail
        factor = self.log_tail(beta, p)
        base = beta * (self.base_up + td.entry_hi) - self.N * p
        return np.exp(base + factor)

    def _run_sums(self, logw):
        """Sum exp(logw) over the runs; logw has shape (N, cells)."""
        flat = logw.T.ravel()
        shift = float(np.max(flat))
        sums = np.add.reduceat(np.exp(flat - shift), self.run_start)
        return sums, shift

    def operator_bracket(self, beta: float, p: float, max_iter: int = 2000,
                         rtol: float = 1e-11) -> Tuple[float, float]:
        """Collatz-Wielandt bracket for the log spectral radius of the induced operator."""
        self._check_beta(beta)
        n = np.arange(1, self.N + 1, dtype=float)[:, None]
        up, s_up = self._run_sums(beta * self.log_up - n * p)
        lo, s_lo = self._run_sums(beta * self.log_lo - n * p)
        tail = self.tail_bounds(beta, p) * math.exp(-s_up)
        t0, t1 = self.tail_targets
        return (self._cw(lo, s_lo, None, np.minimum, upper=False, max_iter=max_iter, rtol=rtol),
                self._cw(up, s_up, (tail, t0, t1), np.maximum, upper=True, max_iter=max_iter, rtol=rtol))

    def _cw(self, weights, shift, tail, op, upper, max_iter, rtol):
        C = self.n_cells
        v = np.ones(C)
        best = math.inf if upper else -math.inf
        rlo, rhi = self.run_tlo, self.run_thi
        for _ in range(max_iter):
            table = _sparse_table(v, op)
            contrib = weights * _range_query(table, op, rlo, rhi)
            mv = np.bincount(self.run_cell, weights=contrib, minlength=C)
            if tail is not None:
                t, t0, t1 = tail
                mv = mv + t * float(np.max(v[t0 : t1 + 1]))
            ratio = mv / v
            r_max, r_min = float(ratio.max()), float(ratio.min())
            if upper:
                best = min(best, math.log(r_max) + shift)
            else:
                best = max(best, math.log(r_min) + shift if r_min > 0 else -math.inf)
            if r_max - r_min <= rtol * r_max:
                break
            v = mv / r_max
        return best

    def z_bounds(self, beta: float, p: float, ell: int) -> Tuple[float, float]:
        """(log lower bound, log upper bound) of Z_ell(beta phi, p)."""
        self._check_beta(beta)
        if ell < 1:
            raise DomainError("ell must be >= 1")
        n = np.arange(1, self.N + 1, dtype=float)[:, None]
        up = beta * self.block_up - n * p
        lo = beta * self.block_lo - n * p
        shift = float(np.max(up))
        w_up, w_lo = np.exp(up - shift), np.exp(lo - shift)
        tail_log = self.log_tail(beta, p) + beta * self.tail.entry_hi - self.N * p - shift
        tail_blk = np.exp(beta * self.block_base_up + tail_log)
        ids = self.block_ids  # block index per column: 0..K-1 single I_m, K lumped
        K = self.K
        # level 1: sup over J0 of each branch weight
        t_up = np.max(w_up, axis=1)
        t_lo = np.max(w_lo, axis=1)
        tail_mass = float(np.exp(beta * float(np.max(self.base_up)) + tail_log))
        log_scale = shift
        for _ in range(ell - 1):
            s_up = np.empty(ids.size)
            s_lo = np.empty(ids.size)
            for col, b in enumerate(ids):
                if b < K:
                    s_up[col], s_lo[col] = t_up[b], t_lo[b]
                else:
                    s_up[col] = float(np.sum(t_up[K:])) + tail_mass
                    s_lo[col] = float(np.sum(t_lo[K:]))
            new_tail = float(tail_blk @ s_up)
            t_up, t_lo = w_up @ s_up, w_lo @ s_lo
            norm = float(np.sum(t_up)) + new_tail
            t_up, t_lo, tail_mass = t_up / norm, t_lo / norm, new_tail / norm
            log_scale += shift + math.log(norm)
        z_hi = math.log(float(np.sum(t_up)) + tail_mass) + log_scale
        total_lo = float(np.sum(t_lo))
        z_lo = math.log(total_lo) + log_scale if total_lo > 0 else -math.inf
        return z_lo, z_hi

    def point(self, p: float, beta: float = 1.0, ell_max: int = 3,
              distortion: Optional[float] = None) -> TwoVarPressurePoint:
        """Bracket for the two-variable pressure of beta*phi at p."""
        phi = self.phi if beta == 1.0 else None
        try:
            self.log_tail(beta, p)
        except DivergentTail as exc:
            if not exc.certified:
                raise
            inf = math.inf
            return TwoVarPressurePoint(phi, p, PressureBracket(inf, inf, ell_max, "bowen"), ell_max,
                                       self.N, inf, True, dict(exc.witness, message=str(exc)))
        tail = float(np.max(self.tail_bounds(beta, p)))
        if distortion is None:
            distortion = beta * distortion_constant(self.phi, self.params)
        lo, hi = -math.inf, math.inf
        z_last = None
        for ell in range(1, ell_max + 1):
            z_lo, z_hi = self.z_bounds(beta, p, ell)
            lo = max(lo, (z_lo - distortion) / ell)
            hi = min(hi, z_hi / ell)
            z_last = (z_lo / ell, z_hi / ell)
        op_lo, op_hi = self.operator_bracket(beta, p)
        lo, hi = max(lo, op_lo), min(hi, op_hi)
        if lo > hi:
            if lo - hi > 1e-9 * (1.0 + abs(lo)):
                raise SolverFailure(f"induced brackets disagree: [{lo}, {hi}]")
            lo = hi
        bracket = PressureBracket(lo, hi, ell_max, "bowen", 0.5 * (lo + hi))
        return TwoVarPressurePoint(phi, p, bracket, ell_max, self.N, tail, False, None,
                                   (op_lo, op_hi), z_last)


@lru_cache(maxsize=8)
def _cached_model(phi, params, n_max, cells):
    return InducedModel(phi, params, n_max, cells)


def induced_model(phi: PotentialSpec, params: MapParams, n_max: int = 10_000,
                  cells: int = DEFAULT_CELLS) -> InducedModel:
    return _cached_model(phi, params, int(n_max), int(cells))


def distortion_constant(phi: PotentialSpec, params: MapParams) -> float:
    """C = D |phi|_(1,gamma), the gap between sup and inf of Birkhoff sums on a cylinder."""
    from .certify import distortion_constants

    const = distortion_constants(params, phi.gamma)
    return const.D * norms(phi).seminorm


# --- public operations -----------------------------------------------------

def transfer_apply(phi: PotentialSpec, p: float, y: float, n_max: int,
                   params: MapParams) -> Tuple[float, float]:
    """(sum over n <= N_max of exp(S_n phi(g_n y) - n p), bound on the remaining terms)."""
    x1 = params.branch_point
    if not x1 < y <= 1.0:
        raise DomainError(f"y={y!r} must lie in J0 = ({x1}, 1]")
    if n_max < 1:
        raise DomainError("N_max must be >= 1")
    a = params.alpha
    orbit = marked_orbit(params, n_max + 2)
    chain = np.empty(n_max + 1)
    t = y
    for j in range(n_max + 1):
        chain[j] = t
        t = solve_expansion(t, a, params.solver_tol)
    entry = solve_expansion_array(chain[:n_max] + 1.0, a)
    vals = evaluate_array(phi, chain)
    run = np.concatenate(([0.0], np.cumsum(vals[1:n_max])))  # sum over chain points 1..n-1
    n = np.arange(1, n_max + 1, dtype=float)
    logs = run + evaluate_array(phi, entry) - n * p
    value = math.fsum(np.exp(logs))

    nrm = norms(phi)
    td = _tail_for(phi, params, n_max, orbit, nrm, TotalVariation(phi))
    factor = _log_tail_factor(td, 1.0, p - td.phi0)
    base = float(np.sum(vals[1:n_max]))  # chain points 1..N-1
    tail = math.exp(base + td.entry_hi - n_max * p + factor)
    return value, tail


def _tail_for(phi, params, n_max, orbit, nrm, tv) -> _TailData:
    a = params.alpha
    x1 = params.branch_point
    y_tail = orbit.y(n_max + 1)
    f_e = evaluate_array(phi, np.array([x1, y_tail]))
    v_e = float(_variation(phi, nrm.seminorm, tv, np.array([x1]), np.array([y_tail]))[0])
    x_N, x_N1 = orbit.x(n_max), orbit.x(n_max + 1)
    return _TailData(
        N=n_max, alpha=a, s=phi.gamma / a, x_N=x_N, X_N=x_N ** -a, X_N1=x_N1 ** -a,
        alpha_low=a * (1.0 - 0.5 * (a + 1.0) * x_N ** a),
        kappa_hi=ratio_sup(phi, x_N).upper, kappa_lo=ratio_inf(phi, x_N).upper,
        entry_hi=0.5 * (f_e[0] + f_e[1] + v_e), entry_lo=0.5 * (f_e[0] + f_e[1] - v_e),
        phi0=float(phi.value_at_zero),
    )


def z_partition(phi: PotentialSpec, p: float, ell: int, n_max: int,
                params: MapParams) -> PressureBracket:
    """Bracket for (1/l) log Z_l(phi, p); raises DivergentTail when Z_1 is infinite."""
    model = induced_model(phi, params, n_max)
    z_lo, z_hi = model.z_bounds(1.0, p, ell)
    return PressureBracket(z_lo / ell, z_hi / ell, ell, "bowen", z_hi / ell)


def two_variable_pressure(phi: PotentialSpec, p: float, ell_max: int, n_max: int,
                          params: MapParams) -> TwoVarPressurePoint:
    """Bracket for the two-variable pressure at p.

    A certified infinite value comes back with divergence_flag set and the
    witness attached; an unbounded but uncertified tail raises DivergentTail.
    """
    if ell_max < 1:
        raise DomainError("ell_max must be >= 1")
    return induced_model(phi, params, n_max).point(p, 1.0, ell_max)
