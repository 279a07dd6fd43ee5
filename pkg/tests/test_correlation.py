import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad
from scipy.special import gamma as G

from fracpearson.errors import DomainError, QuadratureFailure
from fracpearson.mlf import ml
from fracpearson.correlation import (CorrelationReport, QuadraturePolicy, convolution_integral,
                                     corr_asymptotic, corr_asymptotic_n, corr_time_changed,
                                     corr_time_changed_n, lrd_exponent_estimate)
from fracpearson.pearson import PearsonModel
from fracpearson.subordinator import StableMixture, mean_inverse, mean_inverse_n, phi

from conftest import CIR, JACOBI, MODELS, OU, THREE, TWO, mixture

Q = QuadraturePolicy()
SECOND = StableMixture([0.4, 0.9], [0.3, 0.7])
MIXES = {"two": TWO, "second": SECOND}
SINGLE = StableMixture([0.6], [1.0])


@pytest.mark.parametrize("mname", sorted(MIXES))
@pytest.mark.parametrize("t", [0.5, 1.0, 5.0])
def test_equal_time_identity(model, mname, t):
    assert abs(corr_time_changed(model, MIXES[mname], t, t, Q) - 1) <= 2 * Q.rel_tol


def test_symmetry():
    assert corr_time_changed(OU, TWO, 2.0, 1.0) == corr_time_changed(OU, TWO, 1.0, 2.0)


@given(st.floats(0.05, 20.0))
def test_zero_lag_origin_gives_phi(t):
    assert corr_time_changed(OU, TWO, t, 0.0) == phi(TWO, 1.0, t)


def test_zero_zero_is_one():
    assert corr_time_changed(OU, TWO, 0.0, 0.0) == 1.0


def test_theta_is_first_eigenvalue():
    # JACOBI has lambda_1 = 3, so its correlation equals OU with a1 = -3
    fast_ou = PearsonModel(0.0, -3.0, 1.0)
    assert corr_time_changed(JACOBI, TWO, 2.0, 1.0) == pytest.approx(
        corr_time_changed(fast_ou, TWO, 2.0, 1.0), rel=1e-14)


def test_value_in_unit_interval_and_report():
    val, info = corr_time_changed(OU, TWO, 2.0, 1.0, full_output=True)
    assert 0 < val <= 1
    assert info["theta"] == 1.0
    rep = CorrelationReport(2.0, 1.0, val, mc=val + 0.01, std_error=0.005)
    assert rep.z_score == pytest.approx(2.0)
    assert CorrelationReport(2.0, 1.0, val).z_score is None


@pytest.mark.parametrize("t, s", [(2.0, 1.0), (5.0, 1.0), (1.0, 0.5), (3.0, 3.0)])
def test_schemes_agree(t, s):
    gauss = QuadraturePolicy(scheme="gauss_with_substitution")
    a = corr_time_changed(OU, TWO, t, s)
    b = corr_time_changed(OU, TWO, t, s, gauss)
    assert a == pytest.approx(b, rel=1e-8)


@pytest.mark.parametrize("t, s", [(2.0, 1.0), (1.0, 1.0), (10.0, 2.0)])
def test_two_routes_agree(t, s):
    assert corr_time_changed_n(OU, TWO, t, s) == pytest.approx(
        corr_time_changed(OU, TWO, t, s), abs=1e-5)


def test_single_order_specialization():
    b, t, s = 0.6, 2.0, 1.0
    f = lambda y: y ** (b - 1) / G(b) * ml(b, 1, -(t - y) ** b)
    direct = quad(f, 0, s, limit=200)[0] + ml(b, 1, -t ** b)
    assert corr_time_changed_n(OU, SINGLE, t, s) == pytest.approx(direct, rel=1e-8)
    assert corr_time_changed_n(OU, SINGLE, 1.5, 1.5) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("t", [0.5, 1.0, 5.0])
def test_equal_time_three_terms(t):
    assert abs(corr_time_changed_n(OU, THREE, t, t) - 1) <= 2 * Q.rel_tol


@pytest.mark.parametrize("t", [0.3, 1.0, 4.0])
def test_convolution_identity(t):
    integral, _ = convolution_integral(OU, TWO, t, t)
    assert 1.0 * integral == pytest.approx(1 - phi(TWO, 1.0, t), rel=1e-8)


def test_monotone_in_t():
    ts = [1.0, 1.5, 2.0, 4.0, 10.0, 50.0, 300.0]
    vals = [corr_time_changed(OU, TWO, t, 1.0) for t in ts]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_long_range_dependence_partial_sums():
    # corr(t + h, t) is nonincreasing in h, so block minima give a lower bound
    t = 1.0
    edges = np.unique(np.round(np.geomspace(1, 1e4, 25)).astype(int))
    lower = 1.0
    for a, b in zip(edges[:-1], edges[1:]):
        lower += (b - a) * corr_time_changed(OU, TWO, t + b, t)
    classical = 1 / (1 - math.exp(-1.0))
    assert lower >= 10 * classical


def test_quadrature_failure_is_raised():
    strict = QuadraturePolicy(rel_tol=1e-15, max_refinements=1)
    with pytest.raises(QuadratureFailure):
        corr_time_changed(OU, TWO, 2.0, 1.0, strict)


@pytest.mark.parametrize("kw", [{"rel_tol": 0}, {"scheme": "simpson"}, {"max_refinements": 0},
                                {"singularity_exponent": -1.0}, {"singularity_exponent": 0.5}])
def test_quadrature_policy_invariants(kw):
    with pytest.raises(DomainError):
        QuadraturePolicy(**kw)


# ---------------------------------------------------------------- asymptotics

def test_asymptotic_ratio_two_terms():
    ratio = corr_time_changed(OU, TWO, 1e4, 1.0) / corr_asymptotic(OU, TWO, 1e4, 1.0)
    assert 0.95 <= ratio <= 1.05


def test_asymptotic_formula():
    t, s = 1e4, 1.0
    c1, c2, b1, b2 = 0.5, 0.5, 0.3, 0.8
    pref = c1 + (c1 / c2) * s ** b2 * ml(b2 - b1, b2 + 1, -(c1 / c2) * s ** (b2 - b1))
    expected = pref / (t ** b1 * G(1 - b1))
    assert corr_asymptotic(OU, TWO, t, s) == pytest.approx(expected, rel=1e-13)


def test_asymptotic_large_s_prefactor():
    t, s = 1e6, 50.0
    expected = (0.5 / 1.0 + s ** 0.3 / G(1.3)) / (t ** 0.3 * G(0.7))
    assert corr_asymptotic(OU, TWO, t, s, regime="large_s") == pytest.approx(expected, rel=1e-14)
    # approaches the fixed-s law as s grows, with relative gap ~ s^-(b2-b1)
    gaps = [corr_asymptotic(OU, TWO, 1e8, x, regime="large_s") / corr_asymptotic(OU, TWO, 1e8, x) - 1
            for x in (10.0, 1e3, 1e5)]
    assert gaps[0] > gaps[1] > gaps[2] > 0
    assert gaps[1] < 0.05


def test_asymptotic_c1_zero_uses_single_order_law():
    edge = mixture([0.3, 0.8], [0.0, 1.0])
    t, s = 1e4, 1.0
    expected = (1.0 + s ** 0.8 / G(1.8)) / (t ** 0.8 * G(0.2))
    assert corr_asymptotic(OU, edge, t, s) == pytest.approx(expected, rel=1e-13)
    ratio = corr_time_changed(OU, edge, t, s) / expected
    assert 0.95 <= ratio <= 1.05


def test_asymptotic_n_matches_two_term():
    a = corr_asymptotic_n(OU, TWO, 1e4, 1.0)
    b = corr_asymptotic(OU, TWO, 1e4, 1.0)
    assert a == pytest.approx(b, rel=1e-9)
    c = corr_asymptotic_n(OU, TWO, 1e4, 1.0, integral="quadrature")
    assert c == pytest.approx(b, rel=1e-7)


def test_asymptotic_n_single_order():
    t, s, b = 1e4, 1.0, 0.6
    expected = (1.0 + s ** b / G(1 + b)) / (t ** b * G(1 - b))
    assert corr_asymptotic_n(OU, SINGLE, t, s) == pytest.approx(expected, rel=1e-13)


def test_asymptotic_n_ratio_three_terms():
    ratio = corr_time_changed_n(OU, THREE, 1e4, 1.0) / corr_asymptotic_n(OU, THREE, 1e4, 1.0)
    assert 0.9 <= ratio <= 1.1


def test_mean_identity_used_by_asymptotics():
    assert mean_inverse_n(TWO, 1.0) == pytest.approx(mean_inverse(TWO, 1.0), rel=1e-9)


def test_asymptotic_domain():
    with pytest.raises(DomainError):
        corr_asymptotic(OU, TWO, 1e4, 0.0)


# ---------------------------------------------------------------- exponent estimate

@pytest.mark.parametrize("mix, expected", [(TWO, -0.3), (SINGLE, -0.6)], ids=["two", "single"])
def test_lrd_exponent(mix, expected):
    slope = lrd_exponent_estimate(OU, mix, 1.0, np.geomspace(1e2, 1e4, 9))
    assert slope == pytest.approx(expected, abs=0.02)


def test_lrd_rejects_classical_power_law():
    slope, info = lrd_exponent_estimate(OU, None, 1.0, np.geomspace(2.0, 200.0, 9),
                                        full_output=True)
    assert info["r_squared"] < 0.9


def test_lrd_grid_validation():
    with pytest.raises(DomainError):
        lrd_exponent_estimate(OU, TWO, 1.0, np.geomspace(1e2, 1e3, 5))
