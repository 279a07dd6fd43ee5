"""Pearson diffusions with a discrete spectrum.

A Pearson diffusion solves ``dX = mu(X) dt + sqrt(2 D(X)) dW`` with linear
drift ``mu(x) = a0 + a1 x`` and quadratic ``D(x) = d0 + d1 x + d2 x^2``.  The
generator ``G = mu d/dx + D d^2/dx^2`` maps polynomials of degree ``n`` to
polynomials of degree ``n`` with leading factor ``n a1 + n (n-1) d2``, hence

    lambda_n = -n a1 - n (n-1) d2.

Three classes have a purely discrete spectrum and classical orthogonal
polynomial eigenfunctions:

========  ===============  ==================  ================================
class     D(x)             stationary law      eigenfunctions
========  ===============  ==================  ================================
Hermite   d0 > 0           normal              Hermite ``He_n``
Laguerre  d0 + d1 x        gamma               generalized Laguerre
Jacobi    d2 < 0, 2 roots  beta                Jacobi
========  ===============  ==================  ================================
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import special, stats

from .errors import DomainError, UnsupportedClass

__all__ = [
    "PearsonClass",
    "PearsonModel",
    "StationaryLaw",
    "SpectralData",
    "classify",
    "stationary_law",
    "spectral_data",
    "transition_density",
    "transition_density_time_changed",
    "solve_fractional_cauchy",
    "expansion_coefficients",
    "stationary_corr",
]


class PearsonClass(str, enum.Enum):
    HERMITE = "Hermite"
    LAGUERRE = "Laguerre"
    JACOBI = "Jacobi"
    UNSUPPORTED = "Unsupported"


@dataclass(frozen=True)
class PearsonModel:
    """Coefficients of ``mu(x) = a0 + a1 x`` and ``D(x) = d0 + d1 x + d2 x^2``.

    ``state_interval`` defaults to the maximal interval on which ``D > 0``
    (for ``d2 > 0`` with real roots, the part right of the larger root).
    """

    a0: float
    a1: float
    d0: float
    d1: float = 0.0
    d2: float = 0.0
    state_interval: tuple | None = None

    def __post_init__(self):
        for name in ("a0", "a1", "d0", "d1", "d2"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if not self.a1 < 0:
            raise DomainError("a1 must be negative (mean reversion)")
        if self.d0 == self.d1 == self.d2 == 0.0:
            raise DomainError("D(x) vanishes identically")
        natural = self._natural_interval()
        if self.state_interval is None:
            object.__setattr__(self, "state_interval", natural)
        else:
            lo, hi = (float(v) for v in self.state_interval)
            if not lo < hi or lo < natural[0] or hi > natural[1]:
                raise DomainError(f"D(x) must be positive on the state interval {(lo, hi)}")
            object.__setattr__(self, "state_interval", (lo, hi))

    def _natural_interval(self):
        d0, d1, d2 = self.d0, self.d1, self.d2
        if d2 == 0.0:
            if d1 == 0.0:
                if d0 <= 0:
                    raise DomainError("constant D must be positive")
                return (-math.inf, math.inf)
            root = -d0 / d1 + 0.0
            return (root, math.inf) if d1 > 0 else (-math.inf, root)
        disc = d1 * d1 - 4.0 * d2 * d0
        if disc <= 0:
            if d2 < 0:
                raise DomainError("D(x) is nowhere positive")
            return (-math.inf, math.inf)
        r = np.sort(np.roots([d2, d1, d0]).real)
        if d2 < 0:
            return (float(r[0]), float(r[1]))
        return (float(r[1]), math.inf)

    def mu(self, x):
        return self.a0 + self.a1 * np.asarray(x, dtype=float)

    def D(self, x):
        x = np.asarray(x, dtype=float)
        return self.d0 + x * (self.d1 + self.d2 * x)

    def sigma(self, x):
        """Diffusion coefficient ``sqrt(2 D(x))`` (zero outside the interval)."""
        return np.sqrt(2.0 * np.maximum(self.D(x), 0.0))

    def eigenvalue(self, n):
        n = np.asarray(n, dtype=float)
        return -n * self.a1 - n * (n - 1.0) * self.d2


# class parameters -----------------------------------------------------------

def _laguerre_params(model):
    """``(sign, root, shape, rate)`` with ``u = sign (x - root) ~ Gamma(shape, rate)``."""
    sgn = 1.0 if model.d1 > 0 else -1.0
    root = -model.d0 / model.d1
    drift0 = sgn * (model.a0 + model.a1 * root)
    return sgn, root, drift0 / abs(model.d1), -model.a1 / abs(model.d1)


def _jacobi_params(model):
    """``(l, L, p, q)`` with ``(x - l)/(L - l) ~ Beta(p, q)``."""
    lo, hi = model.state_interval if model.d2 < 0 else (math.nan, math.nan)
    width = hi - lo
    p = float(model.mu(lo)) / (abs(model.d2) * width)
    q = -float(model.mu(hi)) / (abs(model.d2) * width)
    return lo, hi, p, q


def classify(model: PearsonModel) -> PearsonClass:
    """Hermite, Laguerre or Jacobi; anything with continuous spectrum is Unsupported."""
    if model.d2 == 0.0 and model.d1 == 0.0:
        return PearsonClass.HERMITE
    if model.d2 == 0.0:
        if model.state_interval != model._natural_interval():
            return PearsonClass.UNSUPPORTED
        _, _, shape, _ = _laguerre_params(model)
        return PearsonClass.LAGUERRE if shape > 0 else PearsonClass.UNSUPPORTED
    if model.d2 < 0:
        if model.state_interval != model._natural_interval():
            return PearsonClass.UNSUPPORTED
        _, _, p, q = _jacobi_params(model)
        return PearsonClass.JACOBI if p > 0 and q > 0 else PearsonClass.UNSUPPORTED
    return PearsonClass.UNSUPPORTED


def _supported(model):
    cls = classify(model)
    if cls is PearsonClass.UNSUPPORTED:
        raise UnsupportedClass(f"model {model} has no purely discrete spectrum")
    return cls


# stationary law -------------------------------------------------------------

@dataclass(frozen=True)
class StationaryLaw:
    """Stationary density ``m`` with its mean and variance.

    ``dist`` is the equivalent frozen :mod:`scipy.stats` distribution.
    """

    density: Callable
    mean: float
    variance: float
    dist: object = field(repr=False)

    def sample(self, size, rng):
        return self.dist.rvs(size=size, random_state=rng)


def _frozen_law(model):
    cls = _supported(model)
    if cls is PearsonClass.HERMITE:
        return stats.norm(loc=-model.a0 / model.a1, scale=math.sqrt(model.d0 / -model.a1))
    if cls is PearsonClass.LAGUERRE:
        sgn, root, shape, rate = _laguerre_params(model)
        # x = root + sgn * u; a negative scale is not allowed, so mirror by hand
        if sgn > 0:
            return stats.gamma(shape, loc=root, scale=1.0 / rate)
        return _Mirrored(stats.gamma(shape, scale=1.0 / rate), root)
    lo, hi, p, q = _jacobi_params(model)
    return stats.beta(p, q, loc=lo, scale=hi - lo)


class _Mirrored:
    """Distribution of ``root - U`` for a frozen distribution ``U``."""

    def __init__(self, base, root):
        self.base, self.root = base, root

    def pdf(self, x):
        return self.base.pdf(self.root - np.asarray(x, dtype=float))

    def mean(self):
        return self.root - self.base.mean()

    def var(self):
        return self.base.var()

    def cdf(self, x):
        return self.base.sf(self.root - np.asarray(x, dtype=float))

    def ppf(self, q):
        return self.root - self.base.isf(np.asarray(q, dtype=float))

    def rvs(self, size=None, random_state=None):
        return self.root - self.base.rvs(size=size, random_state=random_state)


@lru_cache(maxsize=256)
def stationary_law(model: PearsonModel) -> StationaryLaw:
    """Normal, gamma or beta law solving ``(D m)' = mu m`` on the state interval."""
    dist = _frozen_law(model)
    return StationaryLaw(density=dist.pdf, mean=float(dist.mean()),
                         variance=float(dist.var()), dist=dist)


# spectral data --------------------------------------------------------------

@dataclass(frozen=True)
class SpectralData:
    """First ``N`` eigenvalues and orthonormal polynomial eigenfunctions.

    ``basis(x)`` returns the ``(N, len(x))`` array ``Q_n(x)``.
    """

    model: PearsonModel
    cls: PearsonClass
    eigenvalues: np.ndarray

    @property
    def N(self) -> int:
        return len(self.eigenvalues)

    @property
    def theta(self) -> float:
        return float(self.eigenvalues[1])

    def basis(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        n = np.arange(self.N)[:, None]
        m = self.model
        if self.cls is PearsonClass.HERMITE:
            loc = -m.a0 / m.a1
            scale = math.sqrt(m.d0 / -m.a1)
            z = (x[None, :] - loc) / scale
            return special.eval_hermitenorm(n, z) * np.exp(-0.5 * special.gammaln(n + 1.0))
        if self.cls is PearsonClass.LAGUERRE:
            sgn, root, shape, rate = _laguerre_params(m)
            u = rate * sgn * (x[None, :] - root)
            lnorm = special.gammaln(n + shape) - special.gammaln(n + 1.0) - special.gammaln(shape)
            return special.eval_genlaguerre(n, shape - 1.0, u) * np.exp(-0.5 * lnorm)
        lo, hi, p, q = _jacobi_params(m)
        y = 2.0 * (x[None, :] - lo) / (hi - lo) - 1.0
        a, b = q - 1.0, p - 1.0
        nf = n.astype(float)
        with np.errstate(divide="ignore", invalid="ignore"):
            lnorm = (special.gammaln(nf + a + 1.0) + special.gammaln(nf + b + 1.0)
                     - np.log(2.0 * nf + a + b + 1.0) - special.gammaln(nf + a + b + 1.0)
                     - special.gammaln(nf + 1.0) - special.betaln(a + 1.0, b + 1.0))
        lnorm[0] = 0.0
        return special.eval_jacobi(n, a, b, y) * np.exp(-0.5 * lnorm)

    def Q(self, n: int, x):
        if not 0 <= n < self.N:
            raise DomainError(f"n must lie in [0, {self.N})")
        out = self.basis(x)[n]
        return float(out[0]) if np.ndim(x) == 0 else out


def spectral_data(model: PearsonModel, N: int = 30) -> SpectralData:
    """Eigenpairs ``(lambda_n, Q_n)`` for ``n < N``."""
    cls = _supported(model)
    if int(N) != N or N < 2:
        raise DomainError("N must be an integer >= 2")
    return SpectralData(model, cls, model.eigenvalue(np.arange(int(N))))


def _gauss_rule(model, npts):
    """Gauss nodes and probability weights matched to the stationary law."""
    cls = _supported(model)
    if cls is PearsonClass.HERMITE:
        z, w = special.roots_hermitenorm(npts)
        scale = math.sqrt(model.d0 / -model.a1)
        return -model.a0 / model.a1 + scale * z, w / w.sum()
    if cls is PearsonClass.LAGUERRE:
        sgn, root, shape, rate = _laguerre_params(model)
        u, w = special.roots_genlaguerre(npts, shape - 1.0)
        return root + sgn * u / rate, w / w.sum()
    lo, hi, p, q = _jacobi_params(model)
    y, w = special.roots_jacobi(npts, q - 1.0, p - 1.0)
    return lo + (hi - lo) * (y + 1.0) / 2.0, w / w.sum()


def expansion_coefficients(model: PearsonModel, g: Callable, N: int = 30, npts: int = 200):
    """``g_n = int g Q_n m dx`` for ``n < N`` by Gauss quadrature in the stationary weight."""
    sd = spectral_data(model, N)
    x, w = _gauss_rule(model, npts)
    return sd.basis(x) @ (w * np.asarray(g(x), dtype=float))


# densities ------------------------------------------------------------------

def _spectral_sum(model, x, y, weights, sd):
    """``m(x) sum_n weights_n Q_n(x) Q_n(y)`` with broadcasting over x, y."""
    xb, yb = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    Qx = sd.basis(xb.ravel())
    Qy = sd.basis(yb.ravel())
    dens = stationary_law(model).density(xb.ravel())
    vals = dens * np.einsum("n,nk,nk->k", weights, Qx, Qy)
    last = dens * np.abs(Qx[-1] * Qy[-1])
    return vals.reshape(xb.shape), last.reshape(xb.shape)


def transition_density(model: PearsonModel, x, t: float, y, N: int = 30,
                       full_output: bool = False):
    """``p_1(x, t; y) = m(x) sum_{n<N} exp(-lambda_n t) Q_n(x) Q_n(y)``.

    Negative values from truncation are clipped to zero; ``info`` carries the
    raw sum and the size ``exp(-lambda_N t) m |Q_{N-1}(x) Q_{N-1}(y)|`` of the
    first omitted term's envelope.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    sd = spectral_data(model, N)
    raw, last = _spectral_sum(model, x, y, np.exp(-sd.eigenvalues * t), sd)
    tail = math.exp(-float(model.eigenvalue(N)) * t) * last
    out = np.maximum(raw, 0.0)
    out = float(out) if out.ndim == 0 else out
    return (out, {"raw": raw, "tail_bound": tail}) if full_output else out


def _phi_weights(model, mix, t, sd, **kw):
    from .subordinator import laplace_functional
    w = np.ones(sd.N)
    if t > 0:
        for n in range(1, sd.N):
            w[n] = laplace_functional(mix, float(sd.eigenvalues[n]), t, **kw)
    return w


def transition_density_time_changed(model: PearsonModel, mix, x, t: float, y, N: int = 30,
                                    full_output: bool = False):
    """``p_mu(x, t; y) = m(x) sum_{n<N} Phi_{lambda_n}(t) Q_n(x) Q_n(y)``."""
    if not t > 0:
        raise DomainError("t must be positive")
    sd = spectral_data(model, N)
    w = _phi_weights(model, mix, float(t), sd)
    raw, last = _spectral_sum(model, x, y, w, sd)
    out = np.maximum(raw, 0.0)
    out = float(out) if out.ndim == 0 else out
    return (out, {"raw": raw, "last_term": w[-1] * last}) if full_output else out


def solve_fractional_cauchy(model: PearsonModel, mix, g_coeffs, t: float, y, N: int | None = None):
    """``u(t, y) = sum_n g_n Phi_{lambda_n}(t) Q_n(y)`` for coefficients ``g_n``."""
    g = np.asarray(g_coeffs, dtype=float)
    N = len(g) if N is None else min(int(N), len(g))
    if N < 1:
        raise DomainError("need at least one coefficient")
    if t < 0:
        raise DomainError("t must be nonnegative")
    sd = spectral_data(model, max(N, 2))
    w = _phi_weights(model, mix, float(t), sd)[:N]
    Qy = sd.basis(y)[:N]
    out = (g[:N] * w) @ Qy
    return float(out[0]) if np.ndim(y) == 0 else out


def stationary_corr(model: PearsonModel, t, s):
    """Correlation ``exp(-theta |t - s|)`` of the untimed stationary process."""
    theta = float(model.eigenvalue(1))
    out = np.exp(-theta * np.abs(np.asarray(t, dtype=float) - np.asarray(s, dtype=float)))
    return float(out) if out.ndim == 0 else out
