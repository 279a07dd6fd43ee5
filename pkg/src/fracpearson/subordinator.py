"""Analytics of the inverse of a finite stable mixture subordinator.

The time change is ``E(t) = inf{tau : D(tau) > t}`` where ``D`` has Laplace
exponent ``psi(s) = sum_i c_i s^beta_i``.  Everything here is expressed
through Laplace pairs:

=========================  ==============================
quantity                   Laplace image in ``t``
=========================  ==============================
``Phi_theta(t)``           ``psi(s) / (s (theta + psi(s)))``
``E[E(t)]``                ``1 / (s psi(s))``
``h(t)``                   ``1 / psi(s)``
``f_t(u)`` (density)       ``psi(s) / s * exp(-u psi(s))``
=========================  ==============================

Two-term closed forms are generalized Mittag-Leffler series; the ``*_n``
variants invert the images numerically and serve as the independent oracle.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, rgamma

from . import laplace
from .errors import DomainError, NonConvergence
from .laplace import InversionPolicy, LaplaceImage
from .mlf import DEFAULT_POLICY, EvalPolicy, _gml_many, ml

__all__ = [
    "StableMixture",
    "psi",
    "phi",
    "phi_n",
    "laplace_functional",
    "mean_inverse",
    "mean_inverse_n",
    "mean_inverse_asymptotic",
    "h_kernel",
    "h_kernel_n",
    "inverse_subordinator_density",
]

# outer parameter of the two-term Phi series above which inversion is used
_OUTER_LIMIT = 0.9
# accepted relative error bound of the multinomial h_n series
_H_REL_TOL = 1e-9
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class StableMixture:
    """Weights ``c_i`` and strictly increasing orders ``beta_i`` in (0, 1).

    Zero weights are accepted (at least one must be positive) so that the
    single-order limits can be written as e.g. ``weights=(0, 1)``.  With
    ``normalized=True`` the weights must sum to one; otherwise a deviation
    only triggers a warning.
    """

    orders: tuple
    weights: tuple
    normalized: bool = False

    def __post_init__(self):
        orders = tuple(float(b) for b in np.atleast_1d(self.orders))
        weights = tuple(float(c) for c in np.atleast_1d(self.weights))
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "weights", weights)
        if len(orders) < 1 or len(orders) != len(weights):
            raise DomainError("orders and weights must be non-empty and of equal length")
        if not all(0.0 < b < 1.0 for b in orders):
            raise DomainError("orders must lie in (0,1)")
        if any(b2 <= b1 for b1, b2 in zip(orders, orders[1:])):
            raise DomainError("orders must be strictly increasing")
        if not all(math.isfinite(c) and c >= 0.0 for c in weights) or not any(weights):
            raise DomainError("weights must be finite, nonnegative and not all zero")
        total = math.fsum(weights)
        if abs(total - 1.0) > 1e-12:
            if self.normalized:
                raise DomainError(f"weights must sum to 1 (got {total!r})")
            warnings.warn(f"mixture weights sum to {total!r}, not 1", UserWarning, stacklevel=3)

    @property
    def n(self) -> int:
        return len(self.orders)

    def active(self):
        """``(weights, orders)`` of the terms with positive weight."""
        pairs = [(c, b) for c, b in zip(self.weights, self.orders) if c > 0]
        return tuple(p[0] for p in pairs), tuple(p[1] for p in pairs)

    def psi(self, s):
        """Laplace exponent; accepts complex arrays (principal powers)."""
        s = np.asarray(s)
        out = np.zeros(s.shape, dtype=np.result_type(s, float))
        for c, b in zip(self.weights, self.orders):
            if c > 0:
                out = out + c * s ** b
        return out


def psi(mix: StableMixture, s):
    """``psi(s) = sum_i c_i s^beta_i`` for real ``s > 0``."""
    arr = np.asarray(s, dtype=float)
    if np.any(~(arr > 0)) or np.any(~np.isfinite(arr)):
        raise DomainError("psi requires s > 0")
    out = mix.psi(arr)
    return float(out) if np.ndim(s) == 0 else out


def _require_two(mix):
    if mix.n != 2:
        raise DomainError(f"this closed form needs a two-term mixture (got n={mix.n})")


def _single(mix):
    """``(c, beta)`` if exactly one weight is positive, else ``None``."""
    cs, bs = mix.active()
    return (cs[0], bs[0]) if len(cs) == 1 else None


def _as_scalar_or_array(values, like):
    if np.ndim(like) == 0:
        return float(np.asarray(values).ravel()[0])
    return np.asarray(values, dtype=float).reshape(np.shape(like))


def _result(value, info, full_output):
    return (value, info) if full_output else value


# ---------------------------------------------------------------------------
# Phi_theta(t) = E[exp(-theta E(t))]
# ---------------------------------------------------------------------------

def _phi_image(mix, theta):
    def F(s):
        p = mix.psi(s)
        return p / (s * (theta + p))
    return LaplaceImage(F)


def _phi_small_time(mix, theta, t, tol=1e-15, max_order=400):
    """Double power series of ``Phi`` in ``t``, valid for small ``t``.

    Expands ``psi/(s(theta+psi))`` in powers of ``theta / psi`` and of
    ``c_i s^(beta_i - beta_n) / c_n``; every term inverts to ``t^e/Gamma(1+e)``.
    """
    cs, bs = mix.active()
    cn, bn = cs[-1], bs[-1]
    low = [(c / cn, bn - b) for c, b in zip(cs[:-1], bs[:-1])]
    lt = math.log(t)
    total = [1.0]
    quiet = 0
    for order in range(1, max_order):
        shell = []
        for k in range(1, order + 1):
            rest = order - k
            for m in _compositions(rest, len(low)):
                # (k)_{|m|} / prod m_i!
                lc = gammaln(k + rest) - gammaln(k) - sum(gammaln(mi + 1.0) for mi in m)
                e = k * bn + sum(mi * d for mi, (_, d) in zip(m, low))
                lc += k * math.log(theta / cn) + sum(mi * math.log(r) for mi, (r, _) in zip(m, low))
                lc += e * lt - gammaln(1.0 + e)
                shell.append((-1.0) ** (k + rest) * math.exp(lc))
        total.extend(shell)
        biggest = max((abs(v) for v in shell), default=0.0)
        quiet = quiet + 1 if biggest < tol else 0
        if quiet >= 3:
            return math.fsum(total)
    raise NonConvergence("small-time series for Phi did not converge")


def _compositions(total, parts):
    """All tuples of ``parts`` nonnegative ints summing to ``total``."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _phi_series(mix, theta, t, policy):
    """The two-term GML double series; returns ``(value, terms)`` or ``None``."""
    (c1, c2), (b1, b2) = mix.weights, mix.orders
    d = b2 - b1
    x = c1 * t ** d / c2
    w = -theta * t ** b2 / c2
    terms = []
    quiet = 0
    chunk = 32
    for start in range(0, policy.max_terms, chunk):
        r = np.arange(start, start + chunk, dtype=float)
        # E^{r+1}_{b2, d r + 1}(w) and E^{r+1}_{b2, d (r+1) + 1}(w) in one call
        g = _gml_many(b2, np.concatenate([d * r + 1.0, d * (r + 1.0) + 1.0]),
                      np.concatenate([r + 1.0, r + 1.0]), w, policy)
        e1, e2 = g[:chunk], g[chunk:]
        for j in range(chunk):
            rr = start + j
            scale = (-x) ** rr
            term = scale * (e1[j] + x * e2[j])
            terms.append(term)
            quiet = quiet + 1 if abs(term) < policy.abs_tol else 0
            if quiet >= 3:
                return math.fsum(terms), rr + 1
    return None


@lru_cache(maxsize=65536)
def _phi_cached(mix, theta, t, policy, inversion):
    if t == 0.0:
        return 1.0, "exact"
    one = _single(mix)
    if one is not None:
        c, b = one
        return ml(b, 1.0, -theta * t ** b / c, policy), "single_term"
    c1, c2 = mix.weights
    x = c1 * t ** (mix.orders[1] - mix.orders[0]) / c2
    if x <= _OUTER_LIMIT:
        try:
            res = _phi_series(mix, theta, t, policy)
        except NonConvergence:
            res = None
        if res is not None:
            return res[0], "series"
    if t < inversion.min_t:
        return _phi_small_time(mix, theta, t), "small_time_series"
    return laplace.invert(_phi_image(mix, theta), t, inversion), "laplace_inversion"


def _check_theta_t(theta, t):
    if not (math.isfinite(theta) and theta > 0):
        raise DomainError("theta must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0):
        raise DomainError("t must be finite and nonnegative")
    return t


def phi(mix: StableMixture, theta: float, t, policy: EvalPolicy | None = None,
        inversion: InversionPolicy | None = None, full_output: bool = False):
    """``Phi_theta(t) = E[exp(-theta E(t))]`` for a two-term mixture.

    Uses the double GML series in the outer variable
    ``x = c1 t^(b2-b1) / c2``.  When ``x > 0.9`` or the series fails the image
    ``psi/(s(theta+psi))`` is inverted instead (small-time power series below
    ``inversion.min_t``).  A single positive weight uses
    ``E_{b,1}(-theta t^b / c)`` exactly.  Results are memoized.

    With ``full_output=True`` returns ``(value, info)`` where ``info["method"]``
    names the route taken (a list for array input).
    """
    _require_two(mix)
    theta = float(theta)
    tarr = _check_theta_t(theta, t)
    policy = policy or DEFAULT_POLICY
    inversion = inversion or laplace.DEFAULT_INVERSION
    flat = tarr.ravel()
    out = np.empty(flat.shape)
    methods = []
    for i, ti in enumerate(flat):
        out[i], m = _phi_cached(mix, theta, float(ti), policy, inversion)
        methods.append(m)
    value = _as_scalar_or_array(out, t)
    return _result(value, {"method": methods[0] if np.ndim(t) == 0 else methods}, full_output)


def phi_n(mix: StableMixture, theta: float, t, policy: InversionPolicy | None = None,
          full_output: bool = False):
    """``Phi_theta(t)`` for any mixture by inverting ``psi/(s(theta+psi))``.

    ``t = 0`` gives 1.  Times below ``policy.min_t``, where inversion is
    refused, use the small-time double power series.
    """
    theta = float(theta)
    tarr = _check_theta_t(theta, t)
    policy = policy or laplace.DEFAULT_INVERSION
    flat = tarr.ravel()
    out = np.ones(flat.shape)
    methods = np.full(flat.shape, "exact", dtype=object)
    big = flat >= policy.min_t
    if big.any():
        out[big] = laplace.invert(_phi_image(mix, theta), flat[big], policy)
        methods[big] = "laplace_inversion"
    small = (flat > 0) & ~big
    for i in np.nonzero(small)[0]:
        out[i] = _phi_small_time(mix, theta, float(flat[i]))
        methods[i] = "small_time_series"
    value = _as_scalar_or_array(out, t)
    info = {"method": methods[0] if np.ndim(t) == 0 else list(methods)}
    return _result(value, info, full_output)


def laplace_functional(mix: StableMixture, theta: float, t, **kw):
    """``Phi_theta(t)`` by the best available route for the mixture size.

    Two-term mixtures use :func:`phi`; others use the exact single-order
    formula or :func:`phi_n`.
    """
    if mix.n == 2:
        return phi(mix, theta, t, **kw)
    one = _single(mix)
    if one is not None:
        c, b = one
        tarr = _check_theta_t(float(theta), t)
        vals = [ml(b, 1.0, -theta * ti ** b / c) for ti in tarr.ravel()]
        return _as_scalar_or_array(vals, t)
    return phi_n(mix, theta, t, **kw)


# ---------------------------------------------------------------------------
# E[E(t)] and the kernel h
# ---------------------------------------------------------------------------

def _elementwise(fn, t):
    arr = np.asarray(t, dtype=float)
    vals = [fn(float(v)) for v in arr.ravel()]
    return _as_scalar_or_array(vals, t)


def mean_inverse(mix: StableMixture, t, policy: EvalPolicy | None = None):
    """``E[E(t)] = t^b2 E_{b2-b1, b2+1}(-(c1/c2) t^(b2-b1)) / c2``."""
    _require_two(mix)
    if np.any(np.asarray(t, dtype=float) < 0):
        raise DomainError("t must be nonnegative")
    one = _single(mix)
    (c1, c2), (b1, b2) = mix.weights, mix.orders

    def f(ti):
        if ti == 0.0:
            return 0.0
        if one is not None:
            c, b = one
            return ti ** b / (c * math.gamma(1.0 + b))
        return ti ** b2 / c2 * ml(b2 - b1, b2 + 1.0, -(c1 / c2) * ti ** (b2 - b1), policy)

    return _elementwise(f, t)


def mean_inverse_n(mix: StableMixture, t, policy: InversionPolicy | None = None):
    """``E[E(t)]`` for any mixture by inverting ``1 / (s psi(s))``."""
    tarr = np.asarray(t, dtype=float)
    if np.any(tarr <= 0):
        raise DomainError("t must be positive")
    return laplace.invert(LaplaceImage(lambda s: 1.0 / (s * mix.psi(s))), t, policy)


def mean_inverse_asymptotic(mix: StableMixture, t: float, regime: str = "large_t",
                            variant: str = "expanded") -> float:
    """Leading behaviour of ``E[E(t)]`` for large or small ``t``.

    ``large_t``: ``t^b1 / (c1 Gamma(1+b1))``.

    ``small_t``: ``t^b2/(c2 Gamma(1+b2)) - c1 t^(2 b2 - b1)/(c2^2 Gamma(1+2 b2-b1))``.
    ``variant="printed"`` divides the second term by ``c2`` instead of
    ``c2**2``; it is kept for comparison only, since expanding the GML series
    gives the squared power.

    A single positive weight returns the exact ``t^b / (c Gamma(1+b))``.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    if regime not in ("large_t", "small_t"):
        raise DomainError(f"unknown regime {regime!r}")
    if variant not in ("expanded", "printed"):
        raise DomainError(f"unknown variant {variant!r}")
    one = _single(mix)
    if one is not None:
        c, b = one
        return t ** b / (c * math.gamma(1.0 + b))
    _require_two(mix)
    (c1, c2), (b1, b2) = mix.weights, mix.orders
    if regime == "large_t":
        return t ** b1 / (c1 * math.gamma(1.0 + b1))
    denom = c2 * c2 if variant == "expanded" else c2
    e = 2.0 * b2 - b1
    return t ** b2 / (c2 * math.gamma(1.0 + b2)) - c1 * t ** e / (denom * math.gamma(1.0 + e))


def h_kernel(mix: StableMixture, y, policy: EvalPolicy | None = None):
    """``h(y) = y^(b2-1) E_{b2-b1, b2}(-(c1/c2) y^(b2-b1)) / c2``, the inverse of ``1/psi``.

    ``h(y) ~ y^(b2-1)/(c2 Gamma(b2))`` as ``y -> 0`` and
    ``~ y^(b1-1)/(c1 Gamma(b1))`` as ``y -> inf``.
    """
    _require_two(mix)
    if np.any(~(np.asarray(y, dtype=float) > 0)):
        raise DomainError("y must be positive")
    one = _single(mix)
    (c1, c2), (b1, b2) = mix.weights, mix.orders

    def f(yi):
        if one is not None:
            c, b = one
            return yi ** (b - 1.0) * float(rgamma(b)) / c
        return yi ** (b2 - 1.0) / c2 * ml(b2 - b1, b2, -(c1 / c2) * yi ** (b2 - b1), policy)

    return _elementwise(f, y)


def _h_multinomial(mix, y, policy):
    """Multinomial GML expansion of the inverse of ``1/psi`` for ``n >= 2``.

    With ``R(s) = sum_{i<n-1} c_i s^b_i`` and ``A = c_n s^b_n + c_{n-1} s^b_{n-1}``,
    ``1/psi = sum_m (-R)^m / A^(m+1)``; each monomial of ``R^m`` inverts to a
    GML term with ``alpha = b_n - b_{n-1}``.
    """
    cs, bs = mix.weights, mix.orders
    cn, bn = cs[-1], bs[-1]
    cm1, bm1 = cs[-2], bs[-2]
    low_c, low_b = cs[:-2], bs[:-2]
    alpha = bn - bm1
    z = -(cm1 / cn) * y ** alpha
    ly = math.log(y)
    total = []
    bound = 0.0   # sum of |coefficient| scaled to the GML error
    quiet = 0
    for m in range(policy.max_terms):
        comps = list(_compositions(m, len(low_c)))
        if not comps:
            # n = 2: only the m = 0 term exists
            return _h_finish(total, bound, y, m)
        lcoef = np.empty(len(comps))
        gam = np.empty(len(comps))
        for j, k in enumerate(comps):
            lc = gammaln(m + 1.0) - sum(gammaln(ki + 1.0) for ki in k)
            for ki, ci in zip(k, low_c):
                if ki:
                    lc += ki * math.log(ci / cn) if ci > 0 else -math.inf
            lcoef[j] = lc
            gam[j] = bn * (m + 1) - sum(ki * bi for ki, bi in zip(k, low_b))
        keep = np.isfinite(lcoef)
        if keep.any():
            coef = np.exp(lcoef[keep] + (gam[keep] - 1.0) * ly) / cn
            g = _gml_many(alpha, gam[keep], np.full(keep.sum(), m + 1.0), z, policy)
            shell = (-1.0) ** m * coef * g
            bound += float(coef.sum()) * 10 * policy.abs_tol + float(np.abs(shell).sum()) * _EPS
            big = float(np.abs(shell).max())
            total.extend(shell.tolist())
        else:
            big = 0.0
        if not math.isfinite(big) or (m > 50 and big > 1.0):
            break
        quiet = quiet + 1 if big < policy.abs_tol else 0
        if quiet >= 3:
            return _h_finish(total, bound, y, m + 1)
    raise NonConvergence(f"multinomial series for h_n did not converge at y={y!r}")


def _h_finish(total, bound, y, terms):
    value = math.fsum(total)
    if bound > _H_REL_TOL * abs(value):
        raise NonConvergence(
            f"multinomial series for h_n loses accuracy to cancellation at y={y!r}")
    return value, terms


def h_kernel_n(mix: StableMixture, y, method: str = "multinomial_series",
               policy: EvalPolicy | None = None, inversion: InversionPolicy | None = None,
               full_output: bool = False):
    """Kernel ``h_n`` with Laplace transform ``1/psi(s)`` for ``n >= 2``.

    ``method="multinomial_series"`` sums the GML expansion and raises
    :class:`NonConvergence` where it diverges; ``"laplace_inversion"`` inverts
    ``1/psi`` (``y >= inversion.min_t``).
    """
    if mix.n < 2:
        raise DomainError("h_kernel_n needs n >= 2")
    yarr = np.asarray(y, dtype=float)
    if np.any(~(yarr > 0)):
        raise DomainError("y must be positive")
    if method == "laplace_inversion":
        val = laplace.invert(LaplaceImage(lambda s: 1.0 / mix.psi(s)), y, inversion)
        return _result(val, {"method": method}, full_output)
    if method != "multinomial_series":
        raise DomainError(f"unknown method {method!r}")
    if mix.weights[-1] == 0.0 or mix.weights[-2] == 0.0:
        raise DomainError("multinomial series needs positive weights on the two largest orders")
    policy = policy or DEFAULT_POLICY
    flat = yarr.ravel()
    out = np.empty(flat.shape)
    terms = []
    for i, yi in enumerate(flat):
        out[i], nt = _h_multinomial(mix, float(yi), policy)
        terms.append(nt)
    value = _as_scalar_or_array(out, y)
    return _result(value, {"method": method, "terms": terms[0] if np.ndim(y) == 0 else terms},
                   full_output)


def inverse_subordinator_density(mix: StableMixture, u, t: float,
                                 policy: InversionPolicy | None = None):
    """Density ``f_t(u)`` of ``E(t)`` by inverting ``(psi(s)/s) exp(-u psi(s))`` in ``t``.

    Tiny negative values from inversion noise are clipped to zero.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    uarr = np.asarray(u, dtype=float)
    if np.any(~(uarr > 0)):
        raise DomainError("u must be positive")
    # exp(-u psi(s)) stays bounded only while every c_i s^b_i has Re > 0
    sector = min(math.pi, 0.5 * math.pi / max(mix.active()[1]))
    vals = []
    for ui in uarr.ravel():
        def F(s, ui=float(ui)):
            p = mix.psi(s)
            return p / s * np.exp(-ui * p)
        vals.append(max(laplace.invert(LaplaceImage(F, sector=sector), t, policy), 0.0))
    return _as_scalar_or_array(vals, u)
