import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import forward, max_cycle_mean_brute, primitive_necklaces
from thermoscope.bowen import transition_scan
from thermoscope.certify import (
    CertifyBudgets, PeriodicOrbit, TransitionCertificate, certify_transition, compact_sup,
    compute_m0, distortion_constants, enumerate_periodic_orbits, excursion_graph,
    find_n0_and_c, key_lemma_check, lyndon_words, m0_bound, max_mean_cycle, neutral_orbit,
    periodic_point,
)
from thermoscope.errors import DomainError, GraphTooLarge, M0Overflow, NoNegativeMargin
from thermoscope.induced import ReturnWord, marked_orbit
from thermoscope.mp_map import MapParams, itinerary, log_derivative_along, map_forward
from thermoscope.potentials import (evaluate, from_normal_form, geometric, hat, norms, omega,
                                    psi, tilde, zero)
from thermoscope.pressure import PressureBracket, pressure_partition

P1 = MapParams(1.0)
ORBIT = marked_orbit(P1, 100_000)


# --- constants ---------------------------------------------------------------

def test_constants_alpha1_gamma1():
    c = distortion_constants(P1, 1.0)
    assert c.K == 1.0
    floor = math.sqrt(1 + 2 * P1.branch_point) - 1
    assert floor == pytest.approx(0.495349, abs=1e-6)
    assert c.eps1 == min(floor, c.eps0)
    # D = K gamma eps1^-2 zeta(2)
    assert c.D == pytest.approx(c.eps1 ** -2 * math.pi ** 2 / 6, rel=1e-9)
    assert c.D >= c.eps1 ** -2 * math.pi ** 2 / 6


def test_constants_invariants():
    for a in (0.5, 1.0, 2.0):
        for g in (0.5, 1.0):
            c = distortion_constants(MapParams(a), g)
            assert c.eps1 <= c.eps0
            assert c.C1 >= 1.0
            assert c.D > 0
            assert c.K >= 1.0


def test_c1_against_trigamma():
    c = distortion_constants(P1, 1.0)
    e = c.eps1
    # sum_{m>=0} (1 + e m)^-2 = psi'(1/e) / e^2 ; |J0| = 1 - x1 and Hoelder constant 2
    series = mpmath.psi(1, 1 / mpmath.mpf(e)) / mpmath.mpf(e) ** 2
    c1p = (1 - P1.branch_point) * 2 * series
    assert math.log(c.C1) >= float(c1p) * (1 - 1e-12)
    assert math.log(c.C1) == pytest.approx(float(c1p), rel=1e-6)


def test_k_for_gamma_half():
    a, g = 1.0, 0.5
    c = distortion_constants(P1, g)
    xs = np.asarray(ORBIT.xs[1:1002])
    n = np.arange(1, 1002)
    direct = max(1.0, float(np.max((xs * n) ** (g - 1))), a ** ((1 - g) / a))
    assert c.K == pytest.approx(direct, rel=1e-12)


def test_eps0_is_tight_on_levels():
    c = distortion_constants(P1, 1.0)
    e = 1 / P1.alpha + 1
    slack = []
    for n in range(1, 301):
        # Df^n is smallest on J_n at its left end x_{n+1}
        ld = log_derivative_along(ORBIT.x(n + 1), n, P1)
        slack.append(ld - e * math.log1p(c.eps0 * n))
    assert min(slack) >= -1e-9
    full = []
    for n in range(1, 1001):
        ld = log_derivative_along(ORBIT.x(n + 1), n, P1)
        full.append(ld - e * math.log1p(c.eps0 * n))
    assert min(full) == pytest.approx(0.0, abs=1e-9)


def test_constants_horizon_validation():
    with pytest.raises(DomainError):
        distortion_constants(P1, 1.0, 10)


# --- thresholds --------------------------------------------------------------

def brute_n0_condition(alpha, gamma, n_max=2000):
    """Smallest n0 with n x_n^alpha > 2^(-alpha/gamma)/alpha for all n0 <= n <= n_max."""
    bad = [n for n in range(1, n_max + 1)
           if not n * ORBIT.x(n) ** alpha > 2 ** (-alpha / gamma) / alpha]
    return (max(bad) + 1) if bad else 1


@pytest.mark.parametrize("g", [0.5, 1.0])
def test_n0_and_c_omega(g):
    n0, c = find_n0_and_c(omega(g), g, ORBIT)
    assert c == pytest.approx(-0.5, abs=1e-9)
    assert n0 == brute_n0_condition(1.0, g)


def test_n0_and_c_psi():
    n0, c = find_n0_and_c(psi(1.0), 1.0, ORBIT)
    x1, x2 = ORBIT.x(1), ORBIT.x(2)
    assert n0 == 2
    assert -(x2 - x1) ** 2 == pytest.approx(-0.03473, abs=1e-5)
    assert c == pytest.approx(-(x2 - x1) ** 2 / 2, abs=1e-6)
    assert c < 0


def test_n0_and_c_hat():
    n0, c = find_n0_and_c(hat(1.0), 1.0, ORBIT)
    assert c == pytest.approx(-(1 - ORBIT.x(n0)) / 2, abs=1e-6)
    assert c < 0


def test_n0_and_c_failures():
    with pytest.raises(NoNegativeMargin):
        find_n0_and_c(tilde(1.0), 1.0, ORBIT)
    with pytest.raises(NoNegativeMargin):
        find_n0_and_c(from_normal_form(0.0, 1.0, 0.5, "0"), 1.0, ORBIT)
    with pytest.raises(DomainError):
        find_n0_and_c(omega(2.0), 2.0, ORBIT)


def m0_oracle(phi, gamma, c, n0, D, alpha):
    """The threshold formula re-evaluated in 50-digit arithmetic."""
    mpmath.mp.dps = 50
    nrm = norms(phi)
    budget = mpmath.mpf(D) * mpmath.mpf(nrm.seminorm) + 2 * n0 * mpmath.mpf(nrm.sup_norm)
    a, g, c = mpmath.mpf(alpha), mpmath.mpf(gamma), mpmath.mpf(c)
    if gamma < alpha:
        th = 1 - g / a
        return (2 * (n0 + 1) ** th + 4 * a ** (g / a) * th / (-c) * budget) ** (1 / th)
    return (n0 + 1) ** 2 * mpmath.exp(4 * a / (-c) * budget)


def test_m0_exponential_branch_omega1():
    const = distortion_constants(P1, 1.0)
    log_b = m0_bound(omega(1.0), 1.0, -0.5, 1, const, 1.0)
    oracle = m0_oracle(omega(1.0), 1.0, -0.5, 1, const.D, 1.0)
    assert log_b == pytest.approx(float(mpmath.log(oracle)), rel=1e-12)
    # 4 exp(8 (D + 2)) is far past 2^62
    with pytest.raises(M0Overflow) as info:
        compute_m0(omega(1.0), 1.0, -0.5, 1, const, 1.0)
    assert info.value.log_bound == pytest.approx(log_b)


def test_m0_power_branch_omega_half():
    const = distortion_constants(P1, 0.5)
    n0, c = find_n0_and_c(omega(0.5), 0.5, ORBIT)
    m0 = compute_m0(omega(0.5), 0.5, c, n0, const, 1.0)
    oracle = m0_oracle(omega(0.5), 0.5, c, n0, const.D, 1.0)
    assert m0 == int(mpmath.floor(oracle)) + 1
    assert m0 > oracle


def test_m0_validation():
    const = distortion_constants(P1, 1.0)
    with pytest.raises(DomainError):
        m0_bound(omega(1.0), 1.0, 0.1, 1, const, 1.0)
    with pytest.raises(DomainError):
        m0_bound(omega(1.0), 1.0, -0.5, 0, const, 1.0)


# --- periodic orbits ------------------------------------------------------------

@pytest.mark.parametrize("N", range(1, 9))
def test_orbit_count_matches_necklaces(N):
    assert {tuple(w) for w in lyndon_words(N, N)} == primitive_necklaces(N)
    assert len(enumerate_periodic_orbits(N, P1)) == len(primitive_necklaces(N))


def test_fixed_point_orbit():
    orbits = enumerate_periodic_orbits(1, P1, potentials={"hat": hat(1.0)})
    assert len(orbits) == 1
    o = orbits[0]
    assert o.point == 1.0 and o.period == 1
    assert o.averages["hat"] == pytest.approx(evaluate(hat(1.0), 1.0), abs=1e-15)


def test_period_two_orbit():
    p = periodic_point(ReturnWord((2,)), P1)
    z = forward(forward(p, 1.0), 1.0)
    assert abs(z - p) <= 1e-10
    assert itinerary(p, 2, P1) == "10"
    assert ORBIT.y(3) < p <= ORBIT.y(2)


@pytest.mark.parametrize("n", range(1, 9))
def test_single_letter_orbit_location(n):
    p = periodic_point(ReturnWord((n,)), P1)
    assert ORBIT.y(n + 1) < p <= ORBIT.y(n)
    z = p
    for _ in range(n):
        z = map_forward(z, P1)
    assert abs(z - p) <= 1e-10


def test_orbit_points_are_periodic():
    for o in enumerate_periodic_orbits(8, P1):
        z = o.point
        for _ in range(o.period):
            z = map_forward(z, P1)
        gap = abs(z - o.point)
        assert min(gap, 1 - gap) <= 1e-10
        assert len(o.points) == o.period


def test_region_floor_filter():
    floor = ORBIT.x(3)
    kept = enumerate_periodic_orbits(8, P1, region_floor=floor)
    assert kept and all(min(o.points) >= floor for o in kept)
    assert len(kept) < len(enumerate_periodic_orbits(8, P1))
    with pytest.raises(DomainError):
        enumerate_periodic_orbits(0, P1)


def test_neutral_orbit():
    o = neutral_orbit({"g": geometric(1.0)})
    assert o.is_neutral and o.point == 0.0 and o.averages["g"] == 0.0


# --- maximum mean cycle -------------------------------------------------------

@settings(max_examples=150, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(
    st.just(n),
    st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1),
                       st.floats(-5, 5, allow_nan=False)), min_size=1, max_size=14))))
def test_karp_matches_brute_force(case):
    n, edges = case
    # parallel edges: keep the heaviest, as both methods only see the best one
    best = {}
    for u, v, w in edges:
        best[(u, v)] = max(w, best.get((u, v), -math.inf))
    edges = [(u, v, w) for (u, v), w in best.items()]
    src = np.array([e[0] for e in edges])
    dst = np.array([e[1] for e in edges])
    wt = np.array([e[2] for e in edges])
    expected = max_cycle_mean_brute(n, edges)
    got = max_mean_cycle(n, src, dst, wt)
    if expected == -math.inf:
        assert got == -math.inf
    else:
        assert got == pytest.approx(expected, abs=1e-9)


def test_excursion_graph_budget():
    with pytest.raises(GraphTooLarge) as info:
        excursion_graph(omega(1.0), 100, 13, P1)
    assert info.value.max_feasible_depth is not None
    assert (1 << info.value.max_feasible_depth) + 100 <= 1 << 13


def test_compact_sup_omega():
    m0 = 64
    lo, hi = compact_sup(omega(1.0), m0, 7, P1)
    assert hi <= -ORBIT.x(m0) + 1e-15
    assert lo <= hi


def test_compact_sup_hat():
    lo, hi = compact_sup(hat(1.0), 64, 7, P1)
    assert lo == pytest.approx(0.0, abs=1e-15)
    assert hi >= lo


def test_compact_sup_psi_depth10():
    lo, hi = compact_sup(psi(1.0), 256, 10, P1)
    assert lo <= hi < 0


@pytest.mark.parametrize("phi", [omega(1.0), psi(1.0), geometric(1.0)], ids=lambda p: p.name)
def test_compact_sup_refines(phi):
    uppers = [compact_sup(phi, 64, k, P1)[1] for k in (4, 5, 6, 7, 8)]
    assert all(b <= a + 1e-12 for a, b in zip(uppers, uppers[1:]))


# --- verdicts ------------------------------------------------------------------

def test_certify_psi():
    cert = certify_transition(psi(1.0), 1.0, P1)
    assert cert.verdict == "CertifiedTransition"
    assert cert.c < 0 and cert.n0 >= 2
    assert cert.eta_lower <= cert.eta_upper < 0


def test_certify_hat():
    cert = certify_transition(hat(1.0), 1.0, P1)
    assert cert.verdict == "CertifiedNoTransition"
    assert cert.route == "orbit_witness"
    assert cert.witness["point"] == 1.0 and cert.witness["return_word"] == [1]
    assert cert.witness["average"] == pytest.approx(hat(1.0).value_at_zero, abs=1e-15)


def test_certify_gamma_above_alpha():
    cert = certify_transition(omega(2.0), 2.0, P1)
    assert cert.verdict == "CertifiedNoTransition"
    assert cert.route == "gamma_exceeds_alpha"


def test_certify_positive_leading_coefficient():
    cert = certify_transition(from_normal_form(0.0, 1.0, 0.5, "0"), 1.0, P1)
    assert cert.verdict == "CertifiedNoTransition"
    assert cert.route == "positive_leading_coefficient"


def test_certify_tilde_undetermined():
    cert = certify_transition(tilde(1.0), 1.0, P1, CertifyBudgets(beta_max=64.0))
    assert cert.verdict == "Undetermined"
    assert "NoNegativeMargin" in cert.diagnostics["thresholds"]


@pytest.mark.parametrize("phi", [psi(1.0), omega(1.0)], ids=lambda p: p.name)
def test_compact_condition_and_fast_path_agree(phi):
    cert = certify_transition(phi, 1.0, P1)
    assert cert.eta_upper < 0
    assert cert.route == "partition_function_below_one"
    assert cert.witness["log_z_upper"] < 0


def test_certificate_consistent_with_scan():
    cert = certify_transition(psi(1.0), 1.0, P1)
    assert cert.verdict == "CertifiedTransition"
    res = transition_scan(psi(1.0), P1, (0.1, 2 * cert.witness["beta"]), grid_size=8)
    assert not all(d.sign == 1 for d in res.sign_data)


def test_certificate_json():
    cert = certify_transition(hat(1.0), 1.0, P1)
    d = json.loads(cert.to_json(with_timings=False))
    assert d["verdict"] == "CertifiedNoTransition" and "timings" not in d
    assert "timings" in json.loads(cert.to_json())
    assert isinstance(cert, TransitionCertificate)


# --- pressure versus orbit averages ----------------------------------------------

def test_pressure_above_orbit_averages_zero():
    orbits = enumerate_periodic_orbits(8, P1, potentials={"phi": zero()})
    rep = key_lemma_check(zero(), orbits, pressure_partition(zero(), 12, P1))
    assert rep.holds and rep.margin == pytest.approx(math.log(2))


def test_pressure_above_orbit_averages_geometric_and_omega1():
    for phi in (geometric(1.0), omega(1.0)):
        orbits = enumerate_periodic_orbits(8, P1, potentials={"phi": phi})
        rep = key_lemma_check(phi, orbits, pressure_partition(phi, 12, P1))
        assert rep.holds and rep.margin > 0
    fixed = enumerate_periodic_orbits(1, P1, potentials={"phi": omega(1.0)})
    assert fixed[0].averages["phi"] == pytest.approx(-1.0)
    assert pressure_partition(omega(1.0), 12, P1).lo > -1.0


def test_orbit_average_check_rejects_neutral_and_empty():
    with pytest.raises(DomainError):
        key_lemma_check(zero(), [neutral_orbit()], PressureBracket(0, 1, 1, "partition"))
    with pytest.raises(DomainError):
        key_lemma_check(zero(), [], PressureBracket(0, 1, 1, "partition"))


def test_orbit_average_check_inconclusive_reports_margin():
    o = PeriodicOrbit(ReturnWord((1,)), 1.0, 1, {"phi": 0.5})
    rep = key_lemma_check(zero(), [o], PressureBracket(0.4, 0.8, 1, "partition"))
    assert rep.holds is None and rep.margin == pytest.approx(-0.1)
