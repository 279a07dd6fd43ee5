"""Generalized (Prabhakar) Mittag-Leffler function for real arguments.

``E^g_{a,b}(z) = sum_j (g)_j z^j / (j! Gamma(a j + b))``

Three evaluation routes are combined:

* the power series, summed with :func:`math.fsum` from log-space terms, used
  whenever the rounding error it accumulates stays below ``abs_tol``;
* the algebraic large-argument expansion for ``z -> -inf`` (``0 < a < 1``);
* a parabolic Hankel-contour quadrature of the Laplace pair
  ``s^(a g - b) / (s^a - z)^g`` for the cancellation-prone middle range
  (``0 < a < 1``).  Arguments with ``a > 1`` that defeat the float series are
  summed in extended precision with mpmath.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.special import gammaln, rgamma

from .errors import DegenerateLeadingTerm, DomainError, NonConvergence

__all__ = [
    "EvalPolicy",
    "GmlArgs",
    "pochhammer",
    "gml",
    "ml",
    "gml_asymptotic",
    "gml_small_time",
]

_EPS = np.finfo(float).eps
# exp() overflows a little above 709
_LOG_MAX = 700.0


@dataclass(frozen=True)
class EvalPolicy:
    """Tolerances shared by the series-based evaluators.

    ``abs_tol`` truncates series; ``asymptotic_z_threshold`` is the value of
    ``-z`` above which the large-argument expansion is tried first.
    """

    abs_tol: float = 1e-14
    max_terms: int = 4000
    asymptotic_z_threshold: float = 35.0
    contour_nodes: int = 40

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError("abs_tol must be positive")
        if self.max_terms < 1:
            raise DomainError("max_terms must be >= 1")
        if not self.asymptotic_z_threshold > 0:
            raise DomainError("asymptotic_z_threshold must be positive")
        if self.contour_nodes < 16 or self.contour_nodes % 2:
            raise DomainError("contour_nodes must be an even integer >= 16")


DEFAULT_POLICY = EvalPolicy()


def _check_params(alpha, beta, gamma):
    for name, v in (("alpha", alpha), ("beta", beta), ("gamma", gamma)):
        if not (math.isfinite(v) and v > 0):
            raise DomainError(f"{name} must be a finite positive real, got {v!r}")


@dataclass(frozen=True)
class GmlArgs:
    """Parameter pack ``(alpha, beta, gamma, z)`` for :func:`gml`."""

    alpha: float
    beta: float
    gamma: float
    z: float

    def __post_init__(self):
        _check_params(self.alpha, self.beta, self.gamma)
        if not math.isfinite(self.z):
            raise DomainError("z must be finite")

    def evaluate(self, policy: EvalPolicy | None = None) -> float:
        return gml(self.alpha, self.beta, self.gamma, self.z, policy)


def pochhammer(gamma: float, j: int) -> float:
    """Rising factorial ``gamma (gamma+1) ... (gamma+j-1)``; 1 when ``j == 0``."""
    if j < 0 or int(j) != j:
        raise DomainError("j must be a non-negative integer")
    j = int(j)
    if j == 0:
        return 1.0
    if j <= 30:
        out = 1.0
        for i in range(j):
            out *= gamma + i
        return out
    if gamma <= 0:
        raise DomainError("log-space Pochhammer needs gamma > 0")
    return math.exp(gammaln(gamma + j) - gammaln(gamma))


# ---------------------------------------------------------------------------
# power series
# ---------------------------------------------------------------------------

def _log_terms(alpha, beta, gamma, logabsz, n):
    """log |term_j| for j < n; beta, gamma may be arrays (broadcast on axis 0)."""
    j = np.arange(n, dtype=float)
    beta = np.asarray(beta, dtype=float)[..., None]
    gamma = np.asarray(gamma, dtype=float)[..., None]
    return (gammaln(gamma + j) - gammaln(gamma) - gammaln(j + 1.0)
            - gammaln(alpha * j + beta) + j * logabsz)


def _series_many(alpha, betas, gammas, z, policy):
    """Series values and rounding-error estimates for many (beta, gamma).

    Returns ``(values, errors, ok)``; ``ok`` is False where the series either
    overflows or has not dropped below ``abs_tol`` within ``max_terms``.
    """
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    m = betas.shape[0]
    vals = np.full(m, np.nan)
    errs = np.full(m, np.inf)
    ok = np.zeros(m, dtype=bool)
    logabsz = math.log(abs(z))
    logtol = math.log(policy.abs_tol)
    n = 64
    todo = np.arange(m)
    while todo.size:
        lt = _log_terms(alpha, betas[todo], gammas[todo], logabsz, n)
        peak = lt.max(axis=1)
        ipk = lt.argmax(axis=1)
        jj = np.arange(n)
        past = (jj[None, :] > ipk[:, None]) & (lt < logtol)
        done = past.any(axis=1) & (peak < _LOG_MAX)
        overflow = peak >= _LOG_MAX
        for row in np.nonzero(done)[0]:
            k = todo[row]
            stop = int(np.argmax(past[row])) + 1
            mags = np.exp(lt[row, :stop])
            if z < 0:
                terms = np.where(jj[:stop] % 2 == 1, -mags, mags)
            else:
                terms = mags
            vals[k] = math.fsum(terms)
            errs[k] = _EPS * float(np.sum(mags * (np.abs(lt[row, :stop]) + 4.0)))
            ok[k] = True
        remaining = ~done & ~overflow
        todo = todo[remaining]
        if n >= policy.max_terms:
            break
        n = min(2 * n, policy.max_terms)
    return vals, errs, ok


# ---------------------------------------------------------------------------
# large negative argument
# ---------------------------------------------------------------------------

def _asymptotic_negative(alpha, beta, gamma, x, policy):
    """Optimally truncated algebraic expansion of ``E^g_{a,b}(-x)``, x > 0.

    Returns ``(value, error_estimate)``.  Truncation is driven by an envelope
    that ignores the zeros of 1/Gamma, so a term that happens to sit next to
    a pole does not stop the sum early.  The smallest envelope term bounds the
    algebraic remainder.  For ``a > 2/3`` the saddle points at ``arg s = +-pi/a`` sit
    close enough to the principal sheet to leave an exponentially small but
    visible remainder, whose size is added to the estimate.
    """
    lx = math.log(x)
    extra = 0.0
    cos_arg = math.cos(math.pi / alpha)
    if cos_arg < 0:
        root = x ** (1.0 / alpha)
        extra = math.exp(min(root * cos_arg + max(gamma - 1.0, 0.0) * math.log(root)
                             - gammaln(gamma) + 2.0 * math.log(root), _LOG_MAX))
    terms = []
    prev_env = math.inf
    last = math.inf
    for n in range(policy.max_terms):
        arg = beta - alpha * (gamma + n)
        lcoef = gammaln(gamma + n) - gammaln(gamma) - gammaln(n + 1.0) - (gamma + n) * lx
        # |1/Gamma(y)| <= Gamma(1 - y) / pi for y < 0
        lenv = lcoef + (gammaln(1.0 - arg) - math.log(math.pi) if arg <= 0 else -gammaln(arg))
        if lenv > prev_env and n > 1:
            break
        prev_env = lenv
        terms.append((-1.0) ** n * math.exp(lcoef) * float(rgamma(arg)))
        last = math.exp(lenv)
        if last < policy.abs_tol * 1e-3:
            break
    return math.fsum(terms), last + extra


# ---------------------------------------------------------------------------
# Hankel contour (Laplace pair evaluated at t = 1)
# ---------------------------------------------------------------------------

def _contour_nodes(n):
    # parabola s(u) = n (0.1309 - 0.1194 u^2 + 0.25 i u), midpoint rule on [0, pi]
    u = (np.arange(n // 2) + 0.5) * (2.0 * np.pi / n)
    s = n * (0.1309 - 0.1194 * u * u + 0.25j * u)
    ds = n * (-0.2388 * u + 0.25j)
    return s, ds


def _contour_many(alpha, betas, gammas, z, n):
    """E^g_{a,b}(z) for z < 0, 0 < a < 1 by contour quadrature on ``n`` nodes."""
    betas = np.atleast_1d(np.asarray(betas, dtype=float))[:, None]
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))[:, None]
    s, ds = _contour_nodes(n)
    logs = np.log(s)
    logden = np.log(np.exp(alpha * logs) - z)
    w = np.exp(s + (alpha * gammas - betas) * logs - gammas * logden) * ds
    return (2.0 / n) * np.imag(w).sum(axis=1)


# ---------------------------------------------------------------------------
# extended precision fallback
# ---------------------------------------------------------------------------

def _mp_series(alpha, beta, gamma, z, policy):
    lt = _log_terms(alpha, beta, gamma, math.log(abs(z)), policy.max_terms)
    jpeak = int(lt.argmax())
    dps = 25 + int(max(float(lt.max()), 0.0) / math.log(10.0))
    with mpmath.workdps(dps):
        a, b, g, zz = (mpmath.mpf(v) for v in (alpha, beta, gamma, z))
        tol = mpmath.mpf(policy.abs_tol) / 1000
        total = mpmath.mpf(0)
        coef = mpmath.mpf(1)   # (g)_j z^j / j!
        for j in range(policy.max_terms):
            term = coef * mpmath.rgamma(a * j + b)
            total += term
            if j > jpeak and abs(term) < tol:
                return float(total)
            coef *= (g + j) * zz / (j + 1)
    raise NonConvergence("extended-precision GML series did not converge")


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

def _gml_many(alpha, betas, gammas, z, policy=None):
    """Vectorized GML over parameter arrays sharing ``alpha`` and ``z``."""
    policy = policy or DEFAULT_POLICY
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    betas, gammas = np.broadcast_arrays(betas, gammas)
    betas = betas.ravel().copy()
    gammas = gammas.ravel().copy()
    if z == 0:
        return rgamma(betas)
    vals, errs, ok = _series_many(alpha, betas, gammas, z, policy)
    if z > 0:
        if not ok.all():
            raise NonConvergence(
                f"GML series for z={z} did not converge within {policy.max_terms} terms")
        return vals
    good = ok & (errs <= policy.abs_tol)
    bad = np.nonzero(~good)[0]
    if bad.size == 0:
        return vals
    x = -z
    if alpha < 1.0 and x > policy.asymptotic_z_threshold:
        still = []
        for k in bad:
            v, err = _asymptotic_negative(alpha, betas[k], gammas[k], x, policy)
            if err <= policy.abs_tol:
                vals[k] = v
            else:
                still.append(k)
        bad = np.asarray(still, dtype=int)
    if bad.size == 0:
        return vals
    if alpha < 1.0:
        # refine the contour until two consecutive node counts agree; roundoff
        # grows like exp(0.13 n), so the ladder is kept short
        prev = _contour_many(alpha, betas[bad], gammas[bad], z, policy.contour_nodes - 8)
        for n in range(policy.contour_nodes, policy.contour_nodes + 64, 8):
            cur = _contour_many(alpha, betas[bad], gammas[bad], z, n)
            agree = np.abs(cur - prev) <= 10 * policy.abs_tol * np.maximum(1.0, np.abs(cur))
            vals[bad[agree]] = cur[agree]
            bad, prev = bad[~agree], cur[~agree]
            if bad.size == 0:
                return vals
    for k in bad:
        vals[k] = _mp_series(alpha, betas[k], gammas[k], z, policy)
    return vals


def gml(alpha: float, beta: float, gamma: float, z: float,
        policy: EvalPolicy | None = None) -> float:
    """Three-parameter Mittag-Leffler function ``E^gamma_{alpha,beta}(z)``.

    Parameters must be positive reals; ``z`` is any finite real.

    Raises
    ------
    DomainError
        For invalid parameters.
    NonConvergence
        If the series still grows after ``policy.max_terms`` terms.
    """
    _check_params(alpha, beta, gamma)
    if not math.isfinite(z):
        raise DomainError("z must be finite")
    return float(_gml_many(alpha, [beta], [gamma], float(z), policy)[0])


def ml(alpha: float, beta: float, z: float, policy: EvalPolicy | None = None) -> float:
    """Two-parameter Mittag-Leffler function ``E_{alpha,beta}(z)``."""
    return gml(alpha, beta, 1.0, z, policy)


def gml_asymptotic(k: int, v: float, beta: float, c: float, t: float) -> float:
    """Leading large-``t`` term of ``E^k_{v,beta}(-c t^v)``.

    Equals ``1 / (c^k t^(v k) Gamma(beta - v k))``.  When ``beta - v k`` is a
    pole of Gamma the coefficient vanishes: 0.0 is returned and a
    :class:`DegenerateLeadingTerm` warning is issued.
    """
    if k < 1 or int(k) != k:
        raise DomainError("k must be a positive integer")
    if not (c > 0 and t > 0 and v > 0):
        raise DomainError("c, t and v must be positive")
    arg = beta - v * k
    if arg <= 0 and float(arg).is_integer():
        warnings.warn(f"beta - v k = {arg} is a pole of Gamma; leading term is zero",
                      DegenerateLeadingTerm, stacklevel=2)
        return 0.0
    return float(rgamma(arg)) / (c ** k * t ** (v * k))


def gml_small_time(k: int, v: float, beta: float, c: float, t: float) -> float:
    """Two-term small-``t`` expansion ``1/Gamma(beta) - c t^v k / Gamma(beta + v)``."""
    return float(rgamma(beta)) - c * t ** v * k * float(rgamma(beta + v))
