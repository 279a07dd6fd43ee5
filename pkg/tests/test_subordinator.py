import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad
from scipy.special import gamma as G

from fracpearson.errors import DomainError, NonConvergence
from fracpearson.laplace import invert
from fracpearson.mlf import ml
from fracpearson.subordinator import (StableMixture, h_kernel, h_kernel_n,
                                      inverse_subordinator_density, laplace_functional,
                                      mean_inverse, mean_inverse_asymptotic, mean_inverse_n, phi,
                                      phi_n, psi)

from conftest import THREE, TWO, mixture

# mpmath.invertlaplace (talbot and dehoog agree to 30 digits), frozen
PHI_TWO_1_1 = 0.406991382203264889359139936618
MEAN_TWO_2 = 1.67566110897572069108723343926
H_TWO_HALF = 0.935878806366315223459569500836
H_THREE_1 = 0.586119785268211150089335714999
PHI_THREE_2_1 = 0.245024785935447764815922331984
MEAN_THREE_1 = 1.16072309634142634344387681263
E_HALF_MINUS_ONE = 0.427583576155807004410750344491

EDGE = mixture([0.3, 0.8], [0.0, 1.0])


# ---------------------------------------------------------------- mixture

@pytest.mark.parametrize("orders, weights, match", [
    ([0.3, 1.2], [0.5, 0.5], "orders must lie in"),
    ([0.8, 0.3], [0.5, 0.5], "strictly increasing"),
    ([0.3, 0.8], [0.0, 0.0], "not all zero"),
    ([0.3, 0.8], [0.5], "equal length"),
])
def test_mixture_invariants(orders, weights, match):
    with pytest.raises(DomainError, match=match):
        StableMixture(orders, weights)


def test_mixture_normalization_flag():
    with pytest.warns(UserWarning):
        StableMixture([0.3, 0.8], [1.0, 1.0])
    with pytest.raises(DomainError):
        StableMixture([0.3, 0.8], [1.0, 1.0], normalized=True)
    StableMixture([0.3, 0.8], [0.5, 0.5], normalized=True)


@pytest.mark.parametrize("mix, s, expected", [
    (StableMixture([0.8], [1.0]), 1.0, 1.0),
    (TWO, 1.0, 1.0),
    (TWO, 4.0, 0.5 * 4 ** 0.3 + 0.5 * 4 ** 0.8),
])
def test_psi_examples(mix, s, expected):
    assert psi(mix, s) == pytest.approx(expected, rel=1e-15)


@given(st.floats(1e-3, 1e3), st.floats(1.001, 3.0))
def test_psi_increasing_and_concave(s, k):
    a, b, c = psi(TWO, s), psi(TWO, k * s), psi(TWO, k * k * s)
    assert a < b < c
    mid = psi(TWO, 0.5 * (s + k * s))
    assert mid >= 0.5 * (a + b) - 1e-12 * b


def test_psi_rejects_nonpositive():
    with pytest.raises(DomainError):
        psi(TWO, 0.0)


# ---------------------------------------------------------------- Phi

def test_phi_at_zero_is_one():
    assert phi(TWO, 1.7, 0.0) == 1.0
    assert phi_n(THREE, 1.7, 0.0) == 1.0


def test_phi_single_order_edge():
    assert phi(EDGE, 1.0, 2.0) == pytest.approx(ml(0.8, 1, -2 ** 0.8), rel=1e-13)


def test_phi_two_term_value():
    # outer parameter (c1/c2) t^(b2-b1) = 1 > 0.9: inversion route
    val, info = phi(TWO, 1.0, 1.0, full_output=True)
    assert val == pytest.approx(PHI_TWO_1_1, rel=1e-12)
    assert info["method"] == "laplace_inversion"
    assert phi(TWO, 1.0, 0.5, full_output=True)[1]["method"] == "series"


@pytest.mark.parametrize("t, method", [(1e-3, "small_time_series"), (5e-3, "small_time_series"),
                                       (50.0, "laplace_inversion")])
def test_phi_fallback_routes_are_flagged(t, method):
    # (c1/c2) t^(b2-b1) > 0.9 forces the fallback for t > 8.3e-5
    heavy = mixture([0.3, 0.8], [0.99, 0.01])
    val, info = phi(heavy, 1.0, t, full_output=True)
    assert info["method"] == method
    assert val == pytest.approx(phi_n(heavy, 1.0, t), rel=1e-9)


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
def test_phi_series_vs_inversion(theta, t):
    assert phi(TWO, theta, t) == pytest.approx(phi_n(TWO, theta, t), rel=1e-9)


def test_phi_n_single_order():
    assert phi_n(StableMixture([0.5], [1.0]), 1.0, 1.0) == pytest.approx(E_HALF_MINUS_ONE, rel=1e-9)


def test_phi_n_three_terms():
    val = phi_n(THREE, 2.0, 1.0)
    assert 0 < val < 1
    assert val == pytest.approx(PHI_THREE_2_1, rel=1e-9)


def test_phi_small_time_series_matches_inversion_at_overlap():
    # below min_t the series is the only route; check it where both exist
    from fracpearson.subordinator import _phi_small_time
    for t in (0.01, 0.02, 0.05):
        assert _phi_small_time(THREE, 1.0, t) == pytest.approx(phi_n(THREE, 1.0, t), rel=1e-10)


@given(st.floats(0.05, 5.0), st.floats(0.0, 30.0))
def test_phi_bounds(theta, t):
    v = phi(TWO, theta, t)
    assert 0 < v <= 1


def test_phi_monotone_in_t_and_theta():
    t = np.geomspace(1e-3, 1e3, 40)
    v = phi(TWO, 1.0, t)
    assert np.all(np.diff(v) <= 1e-14)
    th = np.geomspace(0.05, 20, 30)
    w = np.array([phi(TWO, x, 2.0) for x in th])
    assert np.all(np.diff(w) <= 1e-14)


@pytest.mark.parametrize("t", [1e3, 1e4])
def test_phi_large_t_law(t):
    ratio = phi(TWO, 1.0, t) * t ** 0.3 * G(0.7) / 0.5
    assert abs(ratio - 1) < 0.05


def test_phi_n_large_t_law():
    t = 1e4
    ratio = phi_n(THREE, 1.0, t) * t ** 0.2 * G(0.8) / (1 / 3)
    assert abs(ratio - 1) < 0.05


def test_laplace_functional_dispatch():
    assert laplace_functional(TWO, 1.0, 1.0) == phi(TWO, 1.0, 1.0)
    single = StableMixture([0.5], [1.0])
    assert laplace_functional(single, 1.0, 1.0) == pytest.approx(E_HALF_MINUS_ONE, rel=1e-13)
    assert laplace_functional(THREE, 2.0, 1.0) == phi_n(THREE, 2.0, 1.0)


def test_phi_requires_two_terms():
    with pytest.raises(DomainError):
        phi(THREE, 1.0, 1.0)


# ---------------------------------------------------------------- E[E(t)]

def test_mean_inverse_examples():
    assert mean_inverse(TWO, 0.0) == 0.0
    assert mean_inverse(EDGE, 1.0) == pytest.approx(1 / G(1.8), rel=1e-14)
    assert mean_inverse(TWO, 2.0) == pytest.approx(MEAN_TWO_2, rel=1e-12)


def test_mean_inverse_nondecreasing():
    v = mean_inverse(TWO, np.geomspace(1e-4, 1e4, 50))
    assert np.all(np.diff(v) > 0)


def test_mean_inverse_n_three_terms():
    assert mean_inverse_n(THREE, 1.0) == pytest.approx(MEAN_THREE_1, rel=1e-9)
    assert mean_inverse_n(TWO, 2.0) == pytest.approx(MEAN_TWO_2, rel=1e-9)


def test_mean_inverse_asymptotic_large_t():
    single = StableMixture([0.8], [1.0])
    for t in (0.3, 7.0):
        assert mean_inverse_asymptotic(single, t) == pytest.approx(t ** 0.8 / G(1.8), rel=1e-14)
    assert mean_inverse_asymptotic(TWO, 1e4) == pytest.approx(10 ** 1.2 / (0.5 * G(1.3)), rel=1e-14)
    assert mean_inverse_asymptotic(TWO, 1e4) == pytest.approx(mean_inverse(TWO, 1e4), rel=0.02)


def test_mean_inverse_asymptotic_small_t_variants():
    exact = mean_inverse(TWO, 1e-3)
    expanded = mean_inverse_asymptotic(TWO, 1e-3, "small_t")
    printed = mean_inverse_asymptotic(TWO, 1e-3, "small_t", variant="printed")
    assert abs(expanded / exact - 1) < 1e-2
    # c2 instead of c2^2 doubles the correction; it misses the 1e-2 band
    assert abs(printed / exact - 1) > 1e-2


# ---------------------------------------------------------------- h

def test_h_kernel_examples():
    assert h_kernel(EDGE, 1.0) == pytest.approx(1 / G(0.8), rel=1e-14)
    assert h_kernel(TWO, 0.5) == pytest.approx(H_TWO_HALF, rel=1e-12)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_h_kernel_integrates_to_mean(s):
    val = quad(lambda y: h_kernel(TWO, y), 0, s, limit=200)[0]
    assert val == pytest.approx(mean_inverse(TWO, s), rel=1e-6)


@given(st.floats(1e-4, 1e4))
def test_h_kernel_positive(y):
    assert h_kernel(TWO, y) > 0


def test_h_kernel_n_collapses_for_two_terms():
    val, info = h_kernel_n(TWO, 0.5, full_output=True)
    assert val == pytest.approx(h_kernel(TWO, 0.5), rel=1e-8)
    assert info["method"] == "multinomial_series"


@pytest.mark.parametrize("y", [0.05, 0.2, 0.5, 1.0])
def test_h_kernel_n_series_vs_inversion(y):
    a = h_kernel_n(THREE, y)
    b = h_kernel_n(THREE, y, method="laplace_inversion")
    assert a == pytest.approx(b, rel=1e-6)


def test_h_kernel_n_three_term_value():
    assert h_kernel_n(THREE, 1.0) == pytest.approx(H_THREE_1, rel=1e-9)
    assert h_kernel_n(THREE, 1.0, method="laplace_inversion") == pytest.approx(H_THREE_1, rel=1e-9)


def test_h_kernel_n_reports_cancellation():
    with pytest.raises(NonConvergence):
        h_kernel_n(THREE, 3.0)


def test_h_kernel_n_integral_identity():
    s = 1.0
    val = quad(lambda y: h_kernel_n(THREE, y), 0, s, limit=200)[0]
    assert val == pytest.approx(MEAN_THREE_1, rel=1e-6)
    assert mean_inverse_n(THREE, s) == pytest.approx(MEAN_THREE_1, rel=1e-9)


# ---------------------------------------------------------------- density of E(t)

@pytest.fixture(scope="module")
def density_moments():
    f = lambda u: inverse_subordinator_density(TWO, u, 1.0)
    mass = quad(f, 0, np.inf, limit=200)[0]
    mean = quad(lambda u: u * f(u), 0, np.inf, limit=200)[0]
    lap = quad(lambda u: math.exp(-u) * f(u), 0, np.inf, limit=200)[0]
    return mass, mean, lap


def test_density_mass(density_moments):
    assert density_moments[0] == pytest.approx(1.0, abs=1e-4)


def test_density_mean(density_moments):
    assert density_moments[1] == pytest.approx(mean_inverse(TWO, 1.0), rel=1e-4)


def test_density_laplace_functional(density_moments):
    assert density_moments[2] == pytest.approx(phi(TWO, 1.0, 1.0), abs=1e-5)


def test_density_nonnegative():
    u = np.geomspace(1e-3, 20, 25)
    assert np.all(inverse_subordinator_density(TWO, u, 1.0) >= 0)
