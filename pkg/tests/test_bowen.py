import math

import pytest

from thermoscope.bowen import parse_beta_range, pressure_bowen, transition_scan
from thermoscope.errors import DomainError
from thermoscope.mp_map import MapParams
from thermoscope.potentials import constant, geometric, hat, omega, psi, scaled, zero
from thermoscope.pressure import pressure_partition

P1 = MapParams(1.0)
LOG2 = math.log(2.0)


def test_bowen_zero():
    b = pressure_bowen(zero(), P1)
    assert b.contains(LOG2)
    assert b.width <= 1e-6


@pytest.mark.parametrize("kappa", [-0.5, 0.3])
def test_bowen_constant(kappa):
    b = pressure_bowen(constant(kappa), P1)
    assert b.contains(LOG2 + kappa)
    assert b.width <= 1e-6


def test_bowen_explicit_bracket_expands():
    b = pressure_bowen(zero(), P1, p_bracket=(2.0, 3.0))
    assert b.contains(LOG2)
    with pytest.raises(DomainError):
        pressure_bowen(zero(), P1, p_bracket=(1.0, 1.0))


@pytest.mark.parametrize("beta", [1.2, 1.5, 2.0])
def test_bowen_geometric_past_transition(beta):
    # P(beta phi) = beta phi(0) = 0 beyond the transition
    b = pressure_bowen(scaled(geometric(1.0), beta), P1)
    assert b.contains(0.0)
    assert b.width <= 0.02


@pytest.mark.parametrize("phi", [omega(1.0), omega(0.5), geometric(1.0), hat(1.0), psi(1.0)],
                         ids=lambda p: p.name)
def test_bowen_at_least_value_at_zero(phi):
    b = pressure_bowen(phi, P1)
    assert b.hi >= phi.value_at_zero - 1e-6


@pytest.mark.parametrize("phi", [omega(1.0), omega(0.5), hat(1.0), psi(1.0), geometric(1.0)],
                         ids=lambda p: p.name)
@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_bowen_and_partition_intersect(phi, beta):
    s = scaled(phi, beta)
    assert pressure_bowen(s, P1).intersects(pressure_partition(s, 12, P1))


def test_parse_beta_range():
    assert parse_beta_range("0.6:2:60") == (0.6, 2.0, 60)
    for bad in ("1:2", "2:1:5", "0:1:5", "1:2:1", "1:2:10001", "a:b:c", "1:inf:4"):
        with pytest.raises((DomainError, ValueError)):
            parse_beta_range(bad)


def test_scan_validation():
    with pytest.raises(DomainError):
        transition_scan(geometric(1.0), P1, (2.0, 1.0))
    with pytest.raises(DomainError):
        transition_scan(geometric(1.0), P1, (0.5, 1.0), grid_size=1)


def assert_monotone_signs(res):
    signs = [d.sign for d in res.sign_data if d.sign != 0]
    # positive then nonpositive: once -1 appears no +1 follows
    if -1 in signs:
        assert 1 not in signs[signs.index(-1):]


def test_scan_geometric():
    res = transition_scan(geometric(1.0), P1, (0.6, 2.0), grid_size=15)
    assert res.verdict == "TransitionLocated"
    lo, hi = res.beta_star
    assert 0.95 <= lo <= 1.0 <= hi <= 1.05
    assert hi - lo <= (2.0 - 0.6) / 15 / 8 + 1e-12
    assert_monotone_signs(res)


def test_scan_omega2_divergent_everywhere():
    res = transition_scan(omega(2.0), P1, (0.1, 50.0), grid_size=12)
    assert res.verdict == "DivergentEverywhere"
    assert res.beta_star is None
    assert res.witness["reason"] == "terms bounded below"
    assert all(d.divergent for d in res.sign_data)


def test_scan_omega05_and_independent_coarse_grid():
    res = transition_scan(omega(0.5), P1, (0.1, 50.0), grid_size=16)
    assert res.verdict == "TransitionLocated"
    lo, hi = res.beta_star
    assert 0.1 < lo < hi < 50.0
    assert_monotone_signs(res)
    check = transition_scan(omega(0.5), P1, (0.1, 50.0), grid_size=8, ell_max=4)
    assert check.verdict == "TransitionLocated"
    c_lo, c_hi = check.beta_star
    assert c_lo <= hi and lo <= c_hi


def test_scan_signs_bracket_transition():
    res = transition_scan(omega(0.5), P1, (0.1, 50.0), grid_size=16)
    lo, hi = res.beta_star
    for d in res.sign_data:
        if d.beta <= lo:
            assert d.sign != -1
        if d.beta >= hi:
            assert d.sign != 1
    at_lo = [d for d in res.sign_data if d.beta == lo]
    at_hi = [d for d in res.sign_data if d.beta == hi]
    assert at_lo[0].lo > 0 and at_hi[0].hi <= 0


def test_scan_no_sign_change():
    res = transition_scan(geometric(1.0), P1, (0.2, 0.6), grid_size=4)
    assert res.verdict == "NoSignChangeInRange"
    assert all(d.sign == 1 for d in res.sign_data)
