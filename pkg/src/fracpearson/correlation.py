"""Steady-state correlation of a time-changed Pearson diffusion.

For ``t >= s`` the correlation of ``X(t) = X_1(E(t))`` is

    corr(t, s) = Phi_theta(t) + theta * int_0^s h(y) Phi_theta(t - y) dy,

with ``theta = lambda_1``, ``Phi_theta(t) = E[exp(-theta E(t))]`` and ``h`` the
inverse Laplace transform of ``1/psi``.  The integrand has power-type
endpoint behaviour at ``y = 0`` (from ``h``) and, when ``s = t``, a cusp at
``y = s`` (``Phi`` near zero time).  Both quadrature schemes below are
built to be exact for such endpoint powers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import expit, gamma as gamma_fn, roots_legendre

from . import subordinator as sub
from .errors import DomainError, NonConvergence, QuadratureFailure
from .laplace import DEFAULT_INVERSION
from .pearson import PearsonModel, spectral_data, stationary_corr

__all__ = [
    "QuadraturePolicy",
    "CorrelationReport",
    "corr_time_changed",
    "corr_time_changed_n",
    "corr_asymptotic",
    "corr_asymptotic_n",
    "lrd_exponent_estimate",
    "convolution_integral",
]

SCHEMES = ("double_exponential", "gauss_with_substitution")
# power-substitution multiplier of the Gauss scheme
_SUB_ORDER = 3.0


@dataclass(frozen=True)
class QuadraturePolicy:
    """Quadrature settings for the ``h * Phi`` convolution.

    ``singularity_exponent`` is the assumed power of the integrand at
    ``y -> 0``; ``None`` takes ``beta_1 - 1`` from the mixture, which is never
    weaker than the true exponent.
    """

    scheme: str = "double_exponential"
    rel_tol: float = 1e-8
    max_refinements: int = 7
    singularity_exponent: float | None = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown quadrature scheme {self.scheme!r}")
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")
        if self.max_refinements < 1:
            raise DomainError("max_refinements must be >= 1")
        e = self.singularity_exponent
        if e is not None and not -1.0 < e <= 0.0:
            raise DomainError("singularity_exponent must lie in (-1, 0]")


DEFAULT_QUADRATURE = QuadraturePolicy()


@dataclass(frozen=True)
class CorrelationReport:
    """Analytic, Monte Carlo and asymptotic correlation at one ``(t, s)``."""

    t: float
    s: float
    analytic: float
    mc: float | None = None
    std_error: float | None = None
    asymptotic: float | None = None

    @property
    def z_score(self) -> float | None:
        if self.mc is None or not self.std_error:
            return None
        return (self.mc - self.analytic) / self.std_error


# ---------------------------------------------------------------------------
# quadrature on [0, s] with endpoint singularities
# ---------------------------------------------------------------------------

def _de_rule(s, level, exponent, tol):
    """tanh-sinh nodes on ``[0, s]`` for step ``2^-level``.

    Returns ``(y, s - y, weights)``; the distance to the upper end is computed
    directly so that ``t - y`` keeps full relative accuracy near ``y = s``.
    The half-width ``U`` is chosen so the neglected end pieces, which behave
    like ``y^(exponent + 1)``, fall below ``tol``.
    """
    # need exp(-pi sinh U)^(exponent + 1) < tol
    U = math.asinh(-math.log(tol) / ((exponent + 1.0) * math.pi))
    U = min(max(U, 3.0), 6.0)
    h = 2.0 ** -level
    k = np.arange(-math.ceil(U / h), math.ceil(U / h) + 1)
    u = k * h
    a = math.pi * np.sinh(u)
    lo = s * expit(a)
    hi = s * expit(-a)
    w = s * h * math.pi * np.cosh(u) * expit(a) * expit(-a)
    keep = (lo > 0) & (hi > 0) & (w > 0)
    return lo[keep], hi[keep], w[keep]


def _gauss_sub_rule(s, level, exponent, upper_exponent):
    """Gauss-Legendre on ``[0, s/2]`` and ``[s/2, s]`` after power substitutions.

    ``y = (s/2) u^p`` with ``p = k/(exponent + 1)`` turns ``y^exponent dy``
    into a polynomial in ``u``; the mirror substitution with
    ``upper_exponent`` handles ``y = s``.  ``k = 3`` (rather than 1) also lifts
    the weaker secondary powers high enough for fast Gauss convergence.
    """
    n = 8 * 2 ** level
    x, w = roots_legendre(n)
    u = 0.5 * (x + 1.0)
    w = 0.5 * w
    half = 0.5 * s
    p = _SUB_ORDER / (exponent + 1.0)
    y1 = half * u ** p
    w1 = half * p * u ** (p - 1.0) * w
    p2 = _SUB_ORDER / (upper_exponent + 1.0)
    d2 = half * u ** p2           # distance to s
    w2 = half * p2 * u ** (p2 - 1.0) * w
    lo = np.concatenate([y1, s - d2])
    hi = np.concatenate([s - y1, d2])
    return lo, hi, np.concatenate([w1, w2])


def _integrate(f, s, q, exponent, upper_exponent):
    """``int_0^s f(y, s - y) dy`` with successive refinement."""
    prev = None
    for level in range(q.max_refinements + 1):
        if q.scheme == "double_exponential":
            y, rest, w = _de_rule(s, level, exponent, 1e-3 * q.rel_tol)
        else:
            y, rest, w = _gauss_sub_rule(s, level, exponent, upper_exponent)
        val = math.fsum(w * f(y, rest))
        if prev is not None and abs(val - prev) <= q.rel_tol * abs(val):
            return val, level
        prev = val
    raise QuadratureFailure(
        f"{q.scheme} did not reach rel_tol={q.rel_tol} in {q.max_refinements} refinements")


# ---------------------------------------------------------------------------
# kernels evaluated at quadrature nodes
# ---------------------------------------------------------------------------

@lru_cache(maxsize=65536)
def _h2(mix, y):
    return sub.h_kernel(mix, y)


def _h_two(mix, y):
    return np.array([_h2(mix, float(v)) for v in y])


def _h_many(mix, y, inversion):
    """``h_n`` at many points: inversion where allowed, series below ``min_t``."""
    one = sub._single(mix)
    if one is not None:
        c, b = one
        return y ** (b - 1.0) / (c * math.gamma(b))
    out = np.empty_like(y)
    big = y >= inversion.min_t
    if big.any():
        out[big] = sub.h_kernel_n(mix, y[big], "laplace_inversion", inversion=inversion)
    for i in np.nonzero(~big)[0]:
        out[i] = sub.h_kernel_n(mix, float(y[i]))
    return out


def _theta(model):
    if isinstance(model, PearsonModel):
        return spectral_data(model, 2).theta
    theta = float(model)
    if not theta > 0:
        raise DomainError("theta must be positive")
    return theta


def _order(t, s):
    t, s = float(t), float(s)
    if not (t >= 0 and s >= 0 and math.isfinite(t) and math.isfinite(s)):
        raise DomainError("t and s must be finite and nonnegative")
    return (t, s) if t >= s else (s, t)


def _default_exponent(mix, q):
    if q.singularity_exponent is not None:
        return q.singularity_exponent
    return min(mix.active()[1]) - 1.0


def convolution_integral(model, mix, t, s, q: QuadraturePolicy | None = None,
                         route: str = "closed_form"):
    """``int_0^s h(y) Phi_theta(t - y) dy`` for ``t >= s``.

    ``route="closed_form"`` uses the two-term GML kernels, ``"inversion"``
    the n-term ones.  Returns ``(value, level)``.
    """
    q = q or DEFAULT_QUADRATURE
    theta = _theta(model)
    gap = t - s
    exponent = _default_exponent(mix, q)
    # Phi(tau) = 1 - C tau^b_n + ..., the cusp at y = s when s = t
    upper = max(mix.active()[1]) if gap == 0 else 0.0
    if route == "closed_form":
        def f(y, rest):
            return _h_two(mix, y) * sub.phi(mix, theta, gap + rest)
    elif route == "inversion":
        def f(y, rest):
            return _h_many(mix, y, DEFAULT_INVERSION) * sub.phi_n(mix, theta, gap + rest)
    else:
        raise DomainError(f"unknown route {route!r}")
    return _integrate(f, s, q, exponent, upper)


def _corr(model, mix, t, s, q, route, phi_fn, full_output):
    t, s = _order(t, s)
    theta = _theta(model)
    if t == 0.0:
        val, level = 1.0, 0
    elif s == 0.0:
        val, level = float(phi_fn(mix, theta, t)), 0
    else:
        integral, level = convolution_integral(theta, mix, t, s, q, route)
        val = float(phi_fn(mix, theta, t)) + theta * integral
    if full_output:
        return val, {"theta": theta, "refinements": level, "route": route}
    return val


def corr_time_changed(model: PearsonModel, mix, t: float, s: float,
                      q: QuadraturePolicy | None = None, full_output: bool = False):
    """Correlation of the time-changed process for a two-term mixture.

    ``h`` and ``Phi`` come from the GML closed forms.  Symmetric in ``(t, s)``.
    """
    sub._require_two(mix)
    return _corr(model, mix, t, s, q, "closed_form", sub.phi, full_output)


def corr_time_changed_n(model: PearsonModel, mix, t: float, s: float,
                        q: QuadraturePolicy | None = None, full_output: bool = False):
    """Correlation for any finite mixture from numerically inverted kernels."""
    return _corr(model, mix, t, s, q, "inversion", _phi_n_any, full_output)


def _phi_n_any(mix, theta, t):
    one = sub._single(mix)
    if one is not None:
        return sub.laplace_functional(sub.StableMixture([one[1]], [one[0]]), theta, t)
    return sub.phi_n(mix, theta, t)


def _leading(mix):
    """Weight and order of the smallest order with positive weight."""
    cs, bs = mix.active()
    return cs[0], bs[0]


def corr_asymptotic(model: PearsonModel, mix, t: float, s: float, regime: str = "fixed_s"):
    """Large-``t`` law ``(c1/theta + c1 E[E(s)]) / (t^b1 Gamma(1 - b1))``.

    ``regime="large_s"`` replaces ``c1 E[E(s)]`` by its own large-``s`` form
    ``s^b1 / Gamma(1 + b1)``.  If ``c1 = 0`` the smallest order carrying
    weight takes its place, which is the single-order law.
    """
    sub._require_two(mix)
    theta = _theta(model)
    if not (t > 0 and s > 0):
        raise DomainError("t and s must be positive")
    c, b = _leading(mix)
    if regime == "fixed_s":
        pref = c / theta + c * sub.mean_inverse(mix, s)
    elif regime == "large_s":
        pref = c / theta + s ** b / math.gamma(1.0 + b)
    else:
        raise DomainError(f"unknown regime {regime!r}")
    return pref / (t ** b * gamma_fn(1.0 - b))


def corr_asymptotic_n(model: PearsonModel, mix, t: float, s: float,
                      q: QuadraturePolicy | None = None, integral: str = "laplace_inversion"):
    """Large-``t`` law for any mixture, ``(c1/theta + c1 int_0^s h_n) / (t^b1 Gamma(1-b1))``.

    ``int_0^s h_n`` is ``E[E(s)]``, taken from inverting ``1/(s psi)`` or, with
    ``integral="quadrature"``, from integrating ``h_n`` directly.
    """
    theta = _theta(model)
    if not (t > 0 and s > 0):
        raise DomainError("t and s must be positive")
    c, b = _leading(mix)
    if integral == "laplace_inversion":
        one = sub._single(mix)
        if one is not None:
            area = s ** one[1] / (one[0] * math.gamma(1.0 + one[1]))
        else:
            area = sub.mean_inverse_n(mix, s)
    elif integral == "quadrature":
        q = q or DEFAULT_QUADRATURE
        exponent = _default_exponent(mix, q)
        area, _ = _integrate(lambda y, rest: _h_many(mix, y, DEFAULT_INVERSION), s, q,
                             exponent, 0.0)
    else:
        raise DomainError(f"unknown integral method {integral!r}")
    return (c / theta + c * area) / (t ** b * gamma_fn(1.0 - b))


def lrd_exponent_estimate(model: PearsonModel, mix, s: float, t_grid, q=None,
                          full_output: bool = False):
    """Least-squares slope of ``log corr(t, s)`` against ``log t``.

    ``mix=None`` uses the untimed correlation ``exp(-theta |t - s|)``, for
    which a power law fits badly (low ``R^2``).  Two-term mixtures use
    :func:`corr_time_changed`, others :func:`corr_time_changed_n`.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 3 or np.any(t <= s):
        raise DomainError("t_grid needs at least 3 times, all greater than s")
    if math.log10(t.max() / t.min()) < 2.0 - 1e-9:
        raise DomainError("t_grid must span at least two decades")
    if mix is None:
        corr = np.array([float(stationary_corr(model, ti, s)) for ti in t])
    elif mix.n == 2:
        corr = np.array([corr_time_changed(model, mix, ti, s, q) for ti in t])
    else:
        corr = np.array([corr_time_changed_n(model, mix, ti, s, q) for ti in t])
    if np.any(corr <= 0):
        raise NonConvergence("correlation underflowed; cannot take logarithms")
    x, y = np.log(t), np.log(corr)
    slope, icept = np.polyfit(x, y, 1)
    resid = y - (slope * x + icept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    if full_output:
        return float(slope), {"r_squared": r2, "intercept": float(icept), "corr": corr}
    return float(slope)
