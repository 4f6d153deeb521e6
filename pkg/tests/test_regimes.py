import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnls.params import PhysicsParams, critical_sigma
from dnls.regimes import (
    NOT_COVERED_CAVEAT,
    Verdict,
    classify,
    damping_threshold,
    decay_exponents,
    interpolation_exponents,
    is_admissible,
    kappa_window,
    nash_theta,
    strichartz_exponents,
)


def P(lam, a, s1, s2, d=3, omega=0.0):
    return PhysicsParams(lam, a, s1, s2, (omega,) * d)


# -- params ---------------------------------------------------------------------


@pytest.mark.parametrize("d, crit", [(1, math.inf), (2, math.inf), (3, 2.0)])
def test_critical_sigma(d, crit):
    assert critical_sigma(d) == crit


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(lam=1, a=-0.1, sigma1=1, sigma2=1, omegas=(0.0,)),
        dict(lam=1, a=1, sigma1=0, sigma2=1, omegas=(0.0,)),
        dict(lam=math.nan, a=1, sigma1=1, sigma2=1, omegas=(0.0,)),
        dict(lam=1, a=1, sigma1=1, sigma2=1, omegas=(-1.0,)),
    ],
)
def test_params_reject(kwargs):
    with pytest.raises(ValueError):
        PhysicsParams(**kwargs)


def test_subcritical_message_names_bound():
    with pytest.raises(ValueError, match=r"2/\(d-2\)"):
        P(1, 1, 1, 3).check_subcritical()


def test_potential_is_harmonic():
    from dnls.grid import make_grid

    g = make_grid(1, 4.0, 8)
    V = P(1, 1, 1, 1, d=1, omega=1.0).potential(g)
    x = g.axis_nodes(0)
    assert V == pytest.approx(0.5 * x**2)


# -- classify: spec examples -------------------------------------------------------


@pytest.mark.parametrize(
    "params, verdict, case",
    [
        (P(1, 0.5, 1, 1), Verdict.GLOBAL_DEFOCUSING, "1"),
        (P(-1, 1, 1, 1.5), Verdict.GLOBAL_DAMPING_DOMINATES, "2b"),
        (P(-1, 0.5, 1, 1), Verdict.NOT_COVERED, "-"),
        (P(-1, 1, 2 / 3, 2 / 3), Verdict.GLOBAL_MASS_CRITICAL_EQUAL, "2c"),
    ],
)
def test_classify_examples(params, verdict, case):
    v = classify(params, 3)
    assert v.verdict is verdict
    assert v.triggering_case == case


def test_not_covered_carries_caveat():
    v = classify(P(-1, 0.5, 1, 1), 3)
    assert NOT_COVERED_CAVEAT in v.reason
    assert "not a blow-up prediction" in v.reason


def test_boundary_sigma1_equals_mass_critical_is_2b():
    assert classify(P(-1, 1, 2 / 3, 1.0), 3).verdict is Verdict.GLOBAL_DAMPING_DOMINATES


@pytest.mark.parametrize("s", [2.0, 2.5])
def test_endpoint_and_beyond_invalid(s):
    assert classify(P(1, 1, s, 1), 3).verdict is Verdict.INVALID
    assert classify(P(1, 1, 1, s), 3).verdict is Verdict.INVALID


def test_invalid_dimension():
    assert classify(P(1, 1, 1, 1, d=1), 4).verdict is Verdict.INVALID


def test_decay_exponents_in_verdict():
    v = classify(P(1, 1, 1, 1.5, d=3), 3)
    assert v.expected_decay_exponent_confined == pytest.approx(2 / (5 * 1.5))
    assert v.expected_decay_exponent_torus == pytest.approx(1 / 1.5)


def test_damping_threshold_continuous_at_one():
    assert damping_threshold(1 - 1e-12, 2.0) == pytest.approx(damping_threshold(1 + 1e-12, 2.0))
    assert damping_threshold(0.25, 1.0) == 0.25
    assert damping_threshold(4.0, 1.0) == 2.0


def test_2d_threshold_is_inclusive():
    assert classify(P(-1, 1.0, 1, 1), 3).verdict is Verdict.GLOBAL_STRONG_DAMPING_EQUAL
    assert classify(P(-1, 1.0 - 1e-6, 1, 1), 3).verdict is Verdict.NOT_COVERED


sig = st.floats(0.05, 4.0)


@settings(max_examples=200, deadline=None)
@given(
    lam=st.floats(-3, 3),
    a=st.floats(0, 3),
    s1=sig,
    s2=sig,
    d=st.sampled_from([1, 2, 3]),
)
def test_classify_total_and_consistent(lam, a, s1, s2, d):
    v = classify(P(lam, a, s1, s2, d=d), d)
    crit = critical_sigma(d)
    if s1 >= crit or s2 >= crit:
        assert v.verdict is Verdict.INVALID
        return
    # exactly one case fires, and it matches the case table
    if lam >= 0:
        expected = Verdict.GLOBAL_DEFOCUSING
    elif s1 < 2 / d and not math.isclose(s1, 2 / d, rel_tol=1e-12):
        expected = Verdict.GLOBAL_MASS_SUBCRITICAL
    elif a > 0 and s1 < s2 and not math.isclose(s1, s2, rel_tol=1e-12):
        expected = Verdict.GLOBAL_DAMPING_DOMINATES
    elif a > 0 and math.isclose(s1, s2, rel_tol=1e-12) and math.isclose(s1, 2 / d, rel_tol=1e-12):
        expected = Verdict.GLOBAL_MASS_CRITICAL_EQUAL
    elif a > 0 and math.isclose(s1, s2, rel_tol=1e-12) and a >= damping_threshold(s1, lam) * (1 - 1e-12):
        expected = Verdict.GLOBAL_STRONG_DAMPING_EQUAL
    else:
        expected = Verdict.NOT_COVERED
    assert v.verdict is expected
    assert (v.expected_decay_exponent_confined is not None) == v.verdict.is_global


# -- Strichartz ------------------------------------------------------------------------


@pytest.mark.parametrize(
    "sigma, d, r, q, theta",
    [(1, 3, 4, 8 / 3, 8), (1, 2, 4, 4, 4), (1, 1, 4, 8, 8 / 3)],
)
def test_strichartz_examples(sigma, d, r, q, theta):
    e = strichartz_exponents(sigma, d)
    assert (e.r, e.q, e.theta) == pytest.approx((r, q, theta))
    assert e.admissible


@settings(max_examples=100, deadline=None)
@given(d=st.sampled_from([1, 2, 3]), frac=st.floats(0.001, 0.999))
def test_strichartz_always_admissible(d, frac):
    sigma = frac * (2.0 if d == 3 else 10.0)
    assert strichartz_exponents(sigma, d).admissible


def test_strichartz_rejects_supercritical():
    with pytest.raises(ValueError):
        strichartz_exponents(2.0, 3)


def test_admissibility_rejects_wrong_pair():
    assert not is_admissible(2.0, 4.0, 3)
    assert not is_admissible(4.0, math.inf, 2)


# -- kappa window, Nash, decay, interpolation ------------------------------------------------


@pytest.mark.parametrize("a, s2, hi", [(1, 1, 0.5), (2, 2, 1 / 3), (0, 1.7, 0.0)])
def test_kappa_window(a, s2, hi):
    lo, h = kappa_window(P(1, a, 1, s2, d=1))
    assert lo == 0 and h == pytest.approx(hi)


def test_kappa_window_for_energy_example():
    # (a=1, sigma2=1.5) gives hi = 1/3.75; kappa = 0.1 sits inside
    lo, hi = kappa_window(P(2, 1, 1, 1.5, d=1))
    assert hi == pytest.approx(1 / 3.75)
    assert lo < 0.1 < hi


@pytest.mark.parametrize("d, p, theta", [(1, 2, 1), (3, 2, 1), (3, 4, 4 / 7), (2, 4, 2 / 3)])
def test_nash_theta(d, p, theta):
    assert nash_theta(d, p) == pytest.approx(theta)


def test_nash_rejects_small_p():
    with pytest.raises(ValueError):
        nash_theta(1, 1.5)


@settings(max_examples=50, deadline=None)
@given(d=st.sampled_from([1, 2, 3]), s2=st.floats(0.05, 1.95))
def test_nash_matches_decay_proof_exponent(d, s2):
    assert nash_theta(d, 2 * s2 + 2) == pytest.approx((2 * s2 + 2) / ((d + 2) * s2 + 2), rel=1e-12)


@pytest.mark.parametrize(
    "s2, d, confined, torus",
    [(1, 1, 2 / 3, 1), (2, 3, 1 / 5, 1 / 2), (1, 2, 1 / 2, 1)],
)
def test_decay_exponents(s2, d, confined, torus):
    c, t, naive = decay_exponents(P(1, 1, 1, s2, d=d), d)
    assert (c, t) == pytest.approx((confined, torus))
    assert naive == pytest.approx(1 / s2)


# (0.5, 1): 0.5 * 3 / (1 * 2.5) = 0.6 by direct substitution
@pytest.mark.parametrize("s1, s2, theta, gamma", [(1, 2, 5 / 8, 1 / 2), (0.5, 1, 0.6, 0.5)])
def test_interpolation_exponents(s1, s2, theta, gamma):
    assert interpolation_exponents(P(1, 1, s1, s2, d=1)) == pytest.approx((theta, gamma))


def test_interpolation_needs_sigma2_above_sigma1():
    with pytest.raises(ValueError):
        interpolation_exponents(P(1, 1, 1, 1, d=1))


@settings(max_examples=100, deadline=None)
@given(s1=st.floats(0.01, 5), gap=st.floats(0.01, 5))
def test_interpolation_theta_in_unit_interval(s1, gap):
    theta, gamma = interpolation_exponents(P(1, 1, s1, s1 + gap, d=1))
    assert 0 < theta < 1 and 0 < gamma < 1
