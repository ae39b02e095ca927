import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from grouprip.basis import make_basis
from grouprip.bounds import (
    GNSP_THRESHOLD,
    BoundInputs,
    chaos_Eu,
    clamped_log,
    covnum_maurey,
    covnum_volumetric,
    dense_lower_bound,
    empirical_covering,
    extended_maurey_bound,
    gamma2_entropy_estimate,
    grip_to_gnsp,
    maurey_K,
    measurement_bound,
)

mp.mp.dps = 50


def mp_clog(t):
    t = mp.mpf(t)
    return mp.mpf(1) if t <= 0 else max(mp.log(t), mp.mpf(1))


def inputs(**kw):
    base = dict(s=2, G=16, g=64, D=1024, d=256, L=4, delta=0.5, eta=0.01, mu=1.0, omega=1.0)
    base.update(kw)
    return BoundInputs(**base)


# measurement bound

def test_measurement_bound_against_mpmath():
    s, mu, D, G, g, delta, eta = 2, 1, 1024, 16, 64, mp.mpf("0.5"), mp.mpf("0.01")
    want = delta**-2 * (s * mu**2 * mp_clog(D) * mp_clog(s) ** 2 * (mp_clog(G) + g * mp_clog(s * mu)) + mp_clog(1 / eta))
    got = measurement_bound(inputs())
    assert got == pytest.approx(float(want), rel=1e-13)


def test_measurement_bound_shared_uses_omega():
    a = measurement_bound(inputs(mu=1.0, omega=0.5), "shared_thm3")
    b = measurement_bound(inputs(mu=0.5, omega=1.0), "independent_thm2")
    assert a == b


def test_measurement_bound_positive_at_s1():
    assert measurement_bound(inputs(s=1, eta=0.5)) > 0
    assert clamped_log(1) == 1.0 and clamped_log(0) == 1.0


def test_doubling_mu_quadruples_dominant_term():
    # s*mu stays below e so the inner log stays clamped; the clamped ln(1/eta) adds delta^-2 = 4
    lo = measurement_bound(inputs(mu=0.5, eta=0.999, s=2))
    hi = measurement_bound(inputs(mu=1.0, eta=0.999, s=2))
    assert (hi - 4.0) / (lo - 4.0) == pytest.approx(4.0, rel=1e-12)
    assert hi / lo == pytest.approx(4.0, rel=1e-2)


def test_measurement_bound_errors():
    with pytest.raises(ValueError):
        measurement_bound(inputs(mu=None))
    with pytest.raises(ValueError):
        measurement_bound(inputs(), "dense")
    with pytest.raises(ValueError):
        inputs(D=100)
    with pytest.raises(ValueError):
        inputs(s=17)
    with pytest.raises(ValueError):
        inputs(delta=1.0)


@given(
    s=st.integers(1, 15),
    mu=st.floats(0.01, 4),
    g=st.integers(1, 63),
    eta=st.floats(1e-6, 0.9),
    delta=st.floats(0.01, 0.98),
)
def test_measurement_bound_monotone(s, mu, g, eta, delta):
    b = measurement_bound(inputs(s=s, mu=mu, g=g, eta=eta, delta=delta))
    assert measurement_bound(inputs(s=s + 1, mu=mu, g=g, eta=eta, delta=delta)) >= b
    assert measurement_bound(inputs(s=s, mu=mu * 1.5, g=g, eta=eta, delta=delta)) >= b
    assert measurement_bound(inputs(s=s, mu=mu, g=g + 1, eta=eta, delta=delta)) >= b
    assert measurement_bound(inputs(s=s, mu=mu, g=g, eta=eta / 2, delta=delta)) >= b
    assert measurement_bound(inputs(s=s, mu=mu, g=g, eta=eta, delta=min(delta * 1.01, 0.99))) < b


def test_dense_lower_bound():
    assert dense_lower_bound(2, 16, 4) == pytest.approx(2 * math.log(8 * math.e) + 8)
    assert dense_lower_bound(3, 3, 1, c1=2.0) == pytest.approx(2 * (3 + 3))
    with pytest.raises(ValueError):
        dense_lower_bound(0, 4, 1)


# GRIP to GNSP

def test_gnsp_boundary_exact():
    d = mp.mpf(4) / mp.sqrt(41)
    assert abs(mp.sqrt(1 - d**2) - d / 4 - d) < mp.mpf(10) ** -45
    c = grip_to_gnsp(GNSP_THRESHOLD)
    assert abs(c.rho - 1.0) <= 1e-12
    assert not c.valid
    assert math.isinf(c.C) and math.isinf(c.Dconst)


def test_gnsp_limit_at_zero():
    c = grip_to_gnsp(1e-12)
    assert (c.rho, c.tau, c.C, c.Dconst) == pytest.approx((0.0, 1.0, 1.0, 3.0), abs=1e-9)
    assert c.valid


def test_gnsp_half_against_mpmath():
    d = mp.mpf("0.5")
    den = mp.sqrt(1 - d**2) - d / 4
    rho, tau = d / den, mp.sqrt(1 + d) / den
    c = grip_to_gnsp(0.5)
    assert c.rho == pytest.approx(float(rho), rel=1e-14)
    assert c.rho == pytest.approx(0.6747407, abs=1e-7)
    assert c.tau == pytest.approx(float(tau), rel=1e-14)
    assert c.C == pytest.approx(float((1 + rho) ** 2 / (1 - rho)), rel=1e-13)
    assert c.Dconst == pytest.approx(float((3 + rho) * tau / (1 - rho)), rel=1e-13)
    assert c.valid


def test_gnsp_quadratic_variant():
    d = mp.mpf("0.5")
    c = grip_to_gnsp(0.5, denominator="quadratic")
    assert c.rho == pytest.approx(float(d / (mp.sqrt(1 - d**2) - d**2 / 4)), rel=1e-14)
    # the printed denominator crosses rho = 1 above the stated threshold
    assert grip_to_gnsp(GNSP_THRESHOLD, denominator="quadratic").valid
    with pytest.raises(ValueError):
        grip_to_gnsp(0.5, denominator="cubic")


@given(st.floats(1e-6, 0.999))
def test_gnsp_valid_iff_below_threshold(delta):
    try:
        c = grip_to_gnsp(delta)
    except ValueError:
        return  # denominator nonpositive near 1
    assert c.valid == (delta < GNSP_THRESHOLD)
    assert c.valid == (c.rho < 1) or abs(c.rho - 1) < 1e-12


def test_gnsp_errors():
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            grip_to_gnsp(bad)
    with pytest.raises(ValueError):
        grip_to_gnsp(0.99)  # sqrt(1-0.98) - 0.2475 < 0


# covering numbers

def test_covnum_volumetric_value():
    want = mp.log(4 * mp.e) + 2 * mp.log(5)
    assert covnum_volumetric(1, 4, 1, 1.0) == pytest.approx(float(want), rel=1e-14)
    assert covnum_volumetric(1, 4, 1, 1.0) == pytest.approx(5.60517, abs=1e-5)


def test_covnum_volumetric_limits():
    assert covnum_volumetric(3, 10, 2, 1e300) == pytest.approx(3 * math.log(10 * math.e / 3))
    assert covnum_volumetric(4, 4, 2, 2.0) == pytest.approx(4 + 16 * math.log(3))
    for bad in [(1, 4, 1, 0.0), (0, 4, 1, 1.0), (5, 4, 1, 1.0), (1, 4, 0, 1.0)]:
        with pytest.raises(ValueError):
            covnum_volumetric(*bad)


@given(st.integers(1, 8), st.integers(0, 8), st.integers(1, 6), st.floats(1e-3, 100))
def test_covnum_monotone_in_radius(s, extra, g, u):
    G = s + extra
    assert covnum_volumetric(s, G, g, 2 * u) <= covnum_volumetric(s, G, g, u)
    assert covnum_maurey(0.7, 64, G, g, 2 * u) <= covnum_maurey(0.7, 64, G, g, u)


def test_maurey_K_examples():
    assert maurey_K(1.0, 100, 0.5) == 295
    assert maurey_K(1.0, 100, 0.5) == int(mp.ceil(16 * mp.log(100) / mp.mpf("0.25")))
    assert maurey_K(1.0, math.e, 4.0) == 1
    assert maurey_K(0.0, 100, 0.5) == 1
    for bad in [(1.0, 1, 0.5), (1.0, 100, 0.0), (-1.0, 100, 1.0)]:
        with pytest.raises(ValueError):
            maurey_K(*bad)


@given(st.floats(0, 5), st.integers(2, 10**6), st.floats(1e-2, 10))
def test_maurey_K_scaling(mu, M, eps):
    K, K2 = maurey_K(mu, M, eps), maurey_K(mu, M, 2 * eps)
    assert K >= 1 and K2 >= 1
    raw = 16 * mu**2 * math.log(M) / eps**2
    # ceiling effects only
    assert K2 <= max(1, math.ceil(raw / 4 * (1 + 1e-12))) and K2 >= math.floor(raw / 4)
    assert K2 <= K


def test_covnum_maurey_value():
    want = mp.sqrt(mp.log(256)) * (mp.sqrt(mp.log(8)) + mp.sqrt(4 * mp.log(9)))
    assert covnum_maurey(1.0, 256, 8, 4, 1.0) == pytest.approx(float(want), rel=1e-14)
    # one group: first summand vanishes
    assert covnum_maurey(1.0, 256, 1, 4, 1.0) == pytest.approx(float(mp.sqrt(mp.log(256)) * mp.sqrt(4 * mp.log(9))))
    with pytest.raises(ValueError):
        covnum_maurey(1.0, 256, 8, 4, 0.0)


def test_extended_maurey():
    assert extended_maurey_bound(1.0, 0.5, [3, 5]) == pytest.approx(float(64 * mp.log(8)), rel=1e-14)
    assert extended_maurey_bound(1.0, 0.5, [3, 5]) == pytest.approx(133.08, abs=5e-3)
    assert extended_maurey_bound(1.0, 0.5, [1]) == 0.0
    a = extended_maurey_bound(2.0, 1.0, [4, 4])
    assert extended_maurey_bound(2.0, 0.5, [4, 4]) == pytest.approx(4 * a)
    for bad in [(1.0, 0.5, []), (1.0, 0.0, [2]), (1.0, 0.5, [0.5])]:
        with pytest.raises(ValueError):
            extended_maurey_bound(*bad)


def test_chaos_Eu():
    assert chaos_Eu(0, 1, 1, 1) == 2
    assert chaos_Eu(2, 3, 0.5, 4) == 14
    assert chaos_Eu(1.5, 2.0, 0.0, 7) == pytest.approx(1.5**2 + 3.0)
    with pytest.raises(ValueError):
        chaos_Eu(1, 1, 1, 0.5)
    with pytest.raises(ValueError):
        chaos_Eu(-1, 1, 1, 1)


def test_gamma2_value():
    s, mu, D, G, g = 4, mp.mpf("0.5"), 256, 8, 4
    want = mp.sqrt(s) * mu * mp.sqrt(mp_clog(D)) * mp_clog(s) * (mp.sqrt(mp.log(G)) + mp.sqrt(g * mp_clog(s * mu)))
    assert gamma2_entropy_estimate(0.5, 4, 256, 8, 4) == pytest.approx(float(want), rel=1e-14)


def test_gamma2_structure():
    # linear in mu while s*mu stays below e and the inner log is clamped
    assert gamma2_entropy_estimate(0.2, 3, 64, 6, 2) == pytest.approx(2 / 3 * gamma2_entropy_estimate(0.3, 3, 64, 6, 2))
    # one group: sqrt(ln G) vanishes and both ln s and ln(s mu) clamp to 1
    assert gamma2_entropy_estimate(0.5, 1, 64, 1, 5) == pytest.approx(0.5 * math.sqrt(math.log(64)) * math.sqrt(5))
    with pytest.raises(ValueError):
        gamma2_entropy_estimate(0.5, 0, 64, 3, 1)


# empirical covering

GRID = np.linspace(0.0, 1.0, 101)


def test_grid_cover_strategies():
    assert empirical_covering(GRID, 0.25, strategy="max_coverage") == 2
    # walking left to right opens balls at 0, 0.26, 0.52, 0.78
    assert empirical_covering(GRID, 0.25) == 4


def test_radius_at_diameter_gives_one(rng):
    pts = rng.standard_normal((50, 4))
    diam = max(np.linalg.norm(p - q) for p in pts for q in pts)
    for strategy in ("first_uncovered", "max_coverage"):
        assert empirical_covering(pts, diam, strategy=strategy) == 1


def test_shuffle_is_seeded(rng):
    pts = rng.standard_normal((200, 3))
    a = empirical_covering(pts, 0.8, shuffle_seed=3)
    assert a == empirical_covering(pts, 0.8, shuffle_seed=3)


def test_lifted_metric_never_larger(rng):
    # max_l ||Psi_l v|| <= ||v||, so every euclidean net is a lifted net
    B = make_basis("dft", 8, 2)
    pts = rng.standard_normal((300, 8)) + 1j * rng.standard_normal((300, 8))
    eu = empirical_covering(pts, 2.0)
    lv = empirical_covering(pts, 2.0, metric="lifted_V", basis=B)
    assert lv <= eu


def test_covering_errors():
    with pytest.raises(ValueError):
        empirical_covering(GRID, 0.0)
    with pytest.raises(ValueError):
        empirical_covering(np.zeros((0, 2)), 1.0)
    with pytest.raises(ValueError):
        empirical_covering(GRID, 0.1, metric="lifted_V")
    with pytest.raises(ValueError):
        empirical_covering(GRID, 0.1, strategy="random")


def one_group_sphere(rng, n, D, g):
    G = D // g
    pts = np.zeros((n, D), dtype=complex)
    for i, k in enumerate(rng.integers(0, G, n)):
        v = rng.standard_normal(g) + 1j * rng.standard_normal(g)
        pts[i, k * g:(k + 1) * g] = v / np.linalg.norm(v)
    return pts


def test_one_group_sphere_net_below_volumetric(rng):
    pts = one_group_sphere(rng, 1000, 8, 2)
    n = empirical_covering(pts, 0.5)
    assert n <= math.exp(covnum_volumetric(1, 4, 2, 0.5))
