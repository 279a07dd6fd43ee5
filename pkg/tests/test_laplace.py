import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracpearson.errors import DomainError, InversionUnstable
from fracpearson.laplace import (InversionPolicy, LaplaceImage, dehoog, hyperbolic, invert,
                                 talbot)
from fracpearson.mlf import ml

PAIRS = {
    "exp": (lambda s: 1 / (s + 1), lambda t: np.exp(-t)),
    "ramp": (lambda s: 1 / s ** 2, lambda t: t),
    "cos": (lambda s: s / (s ** 2 + 1), lambda t: np.cos(t)),
}


@pytest.mark.parametrize("F, t, expected", [
    (PAIRS["exp"][0], 1.0, math.exp(-1)),
    (PAIRS["ramp"][0], 3.0, 3.0),
])
def test_known_pairs(F, t, expected):
    assert invert(F, t) == pytest.approx(expected, rel=1e-10)


def test_fractional_relaxation_pair():
    val = invert(lambda s: s ** -0.2 / (s ** 0.8 + 1), 2.0)
    assert val == pytest.approx(ml(0.8, 1, -2 ** 0.8), rel=1e-9)


@pytest.mark.parametrize("name", sorted(PAIRS))
@pytest.mark.parametrize("method", ["talbot_contour", "series_acceleration"])
def test_self_consistency_on_grid(name, method):
    F, f = PAIRS[name]
    t = np.geomspace(0.1, 10, 15)
    got = invert(F, t, InversionPolicy(method=method))
    np.testing.assert_allclose(got, f(t), rtol=1e-8, atol=1e-12)


@pytest.mark.parametrize("name", sorted(PAIRS))
def test_methods_agree(name):
    F, _ = PAIRS[name]
    t = np.geomspace(0.1, 10, 9)
    a = invert(F, t, InversionPolicy(method="talbot_contour", check=False))
    b = invert(F, t, InversionPolicy(method="series_acceleration", check=False))
    if name == "cos":
        # poles at +-i sit near the 32-node contour for t > 2; the checked path refines
        a = invert(F, t)
    np.testing.assert_allclose(a, b, rtol=1e-7, atol=1e-12)


def test_raw_rules_on_smooth_images():
    F, f = PAIRS["exp"]
    t = np.geomspace(0.1, 10, 9)
    np.testing.assert_allclose(talbot(F, t), f(t), rtol=1e-10, atol=1e-13)
    np.testing.assert_allclose(dehoog(F, t), f(t), rtol=1e-10, atol=1e-12)


@given(st.floats(0.05, 20.0), st.floats(0.1, 5.0))
def test_shifted_exponential(t, a):
    assert invert(lambda s: 1 / (s + a), t) == pytest.approx(math.exp(-a * t), rel=1e-7, abs=1e-11)


def test_refuses_small_times():
    with pytest.raises(InversionUnstable):
        invert(PAIRS["exp"][0], 0.005)


def test_nonpositive_time_is_domain_error():
    with pytest.raises(DomainError):
        invert(PAIRS["exp"][0], 0.0)


def test_disagreement_is_detected():
    # exp(+s) is not a Laplace image; the two routes return unrelated numbers
    with pytest.raises(InversionUnstable):
        invert(lambda s: np.exp(s) / s, 1.0)


def test_sector_image_uses_restricted_contour():
    # exp(-sqrt(s)) grows off the right half-plane but is fine inside |arg s| < 3pi/4
    img = LaplaceImage(lambda s: np.exp(-np.sqrt(s)), sector=0.75 * math.pi)
    t = np.array([0.2, 1.0, 3.0])
    exact = np.exp(-1 / (4 * t)) / (2 * np.sqrt(np.pi) * t ** 1.5)
    np.testing.assert_allclose(invert(img, t), exact, rtol=1e-9)
    np.testing.assert_allclose(hyperbolic(img.eval, t, sector=img.sector), exact, rtol=1e-10)


@pytest.mark.parametrize("kw", [{"nodes": 8}, {"target_rel_tol": 0.0}, {"method": "euler"}])
def test_policy_invariants(kw):
    with pytest.raises(DomainError):
        InversionPolicy(**kw)


def test_sector_invariant():
    with pytest.raises(DomainError):
        LaplaceImage(lambda s: 1 / s, sector=0.4 * math.pi)


def test_scalar_and_array_shapes():
    assert isinstance(invert(PAIRS["exp"][0], 1.0), float)
    assert invert(PAIRS["exp"][0], np.array([1.0, 2.0])).shape == (2,)
