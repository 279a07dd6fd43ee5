"""Numerical inverse Laplace transform.

Two unrelated algorithms are provided and, by default, both are run:

``talbot_contour``
    Trapezoidal rule on Weideman's optimized cotangent (Talbot-type)
    contour, scaled by ``nodes / t``.
``series_acceleration``
    de Hoog, Knight & Stokes: Fourier series on ``[0, 2T]`` accelerated by a
    quotient-difference continued fraction.

When ``policy.check`` is set the result of the selected method is returned
only if the other method agrees to ``10 * target_rel_tol`` (plus the absolute
floor ``abs_floor``).  Times where they differ by more than
``target_rel_tol`` are retried with 1.5x and 2x the nodes, which cures singularities lying close to the contour (oscillatory
originals at large ``t``); persistent disagreement raises
:class:`~fracpearson.errors.InversionUnstable`.  Images must be
analytic to the right of ``abscissa`` and, for the contour method, in the
plane cut along ``(-inf, abscissa]``.

Some images are analytic in the cut plane but grow violently away from the
right half-plane (``exp(-u psi(s))`` is an example).  Such an image declares
``sector < pi``; the Talbot contour, which sweeps out to ``arg s ~ 0.82 pi``,
is then replaced by a hyperbolic contour whose asymptotes stay inside the
sector and whose node count is chosen from an a-priori error model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, InversionUnstable

__all__ = ["LaplaceImage", "InversionPolicy", "invert", "talbot", "dehoog", "hyperbolic"]

METHODS = ("talbot_contour", "series_acceleration")


@dataclass(frozen=True)
class LaplaceImage:
    """A Laplace-domain function.

    ``eval`` must accept a complex ndarray and return an array of the same
    shape (it is always called vectorized).
    """

    eval: Callable[[np.ndarray], np.ndarray]
    abscissa: float = 0.0
    sector: float = math.pi

    def __post_init__(self):
        if not math.pi / 2 < self.sector <= math.pi:
            raise DomainError("sector must lie in (pi/2, pi]")


@dataclass(frozen=True)
class InversionPolicy:
    """Inversion settings; ``abs_floor`` is the absolute slack of the agreement check."""

    method: str = "talbot_contour"
    nodes: int = 32
    target_rel_tol: float = 1e-8
    check: bool = True
    min_t: float = 0.01
    abs_floor: float = 1e-11

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown inversion method {self.method!r}")
        if self.nodes < 16:
            raise DomainError("nodes must be >= 16")
        if not self.target_rel_tol > 0:
            raise DomainError("target_rel_tol must be positive")


DEFAULT_INVERSION = InversionPolicy()

# Weideman (2006) optimized Talbot contour parameters
_SIGMA, _MU, _A, _NU = -0.6122, 0.5017, 0.6407, 0.2645
# largest |arg s| reached by that contour (at theta = pi)
_TALBOT_REACH = math.atan2(_NU * math.pi, -(_SIGMA + _MU * math.pi / math.tan(_A * math.pi)))
_TALBOT_REACH = math.pi - _TALBOT_REACH if _TALBOT_REACH < math.pi / 2 else _TALBOT_REACH


def talbot(F, t, nodes=32, shift=0.0):
    """Invert ``F`` at the positive times ``t`` on the cotangent contour."""
    t = np.asarray(t, dtype=float)
    tt = t.reshape(-1, 1)
    th = (np.arange(nodes // 2) + 0.5) * (2.0 * np.pi / nodes)
    cot = 1.0 / np.tan(_A * th)
    z = (nodes / tt) * (_SIGMA + _MU * th * cot + 1j * _NU * th)
    dz = (nodes / tt) * (_MU * (cot - _A * th / np.sin(_A * th) ** 2) + 1j * _NU)
    w = np.exp(z * tt) * F(z + shift) * dz
    out = (2.0 / nodes) * np.imag(w).sum(axis=1) * np.exp(shift * tt[:, 0])
    return out.reshape(t.shape)


def dehoog(F, t, nodes=32, shift=0.0, tol=1e-16, scale=2.0):
    """Invert ``F`` with the de Hoog-Knight-Stokes accelerated Fourier series.

    Uses ``2 M + 1`` image evaluations per time with ``M = nodes // 2``.
    """
    t = np.asarray(t, dtype=float)
    tt = t.ravel()
    M = nodes // 2
    n = 2 * M + 1
    T = scale * tt[:, None]
    gam = shift - math.log(tol) / (scale * T)
    p = gam + 1j * np.pi * np.arange(n)[None, :] / T
    fp = np.asarray(F(p), dtype=complex)
    nt = tt.size
    # the accelerated series is a Fourier sum bounded by exp(gam t)/T sum|F|;
    # rows where that bound is negligible (typically underflowed images)
    # would only feed 0/0 into the QD table
    bound = np.exp(gam[:, 0] * tt) / T[:, 0] * np.abs(fp).sum(axis=1)
    null = bound < 1e-150
    fp[null] = 1.0
    with np.errstate(all="ignore"):
        out = _dehoog_qd(fp, M, n, nt, tt, T)
    out = np.exp(gam[:, 0] * tt) / T[:, 0] * out
    out[null] = 0.0
    return out.reshape(t.shape)


def _dehoog_qd(fp, M, n, nt, tt, T):
    e = np.zeros((nt, n, M + 1), dtype=complex)
    q = np.zeros((nt, 2 * M, M), dtype=complex)
    q[:, 0, 0] = fp[:, 1] / (fp[:, 0] / 2.0)
    q[:, 1:, 0] = fp[:, 2:2 * M + 1] / fp[:, 1:2 * M]
    for r in range(1, M + 1):
        mr = 2 * (M - r) + 1
        e[:, :mr, r] = q[:, 1:mr + 1, r - 1] - q[:, :mr, r - 1] + e[:, 1:mr + 1, r - 1]
        if r != M:
            mq = 2 * (M - r) + 1
            q[:, :mq, r] = q[:, 1:mq + 1, r - 1] * e[:, 1:mq + 1, r] / e[:, :mq, r]
    d = np.zeros((nt, n), dtype=complex)
    d[:, 0] = fp[:, 0] / 2.0
    for r in range(1, M + 1):
        d[:, 2 * r - 1] = -q[:, 0, r - 1]
        d[:, 2 * r] = -e[:, 0, r]
    zz = np.exp(1j * np.pi * tt / T[:, 0])
    A0 = np.zeros(nt, dtype=complex)
    A1 = d[:, 0].copy()
    B0 = np.ones(nt, dtype=complex)
    B1 = np.ones(nt, dtype=complex)
    for i in range(1, 2 * M):
        A0, A1 = A1, A1 + d[:, i] * A0 * zz
        B0, B1 = B1, B1 + d[:, i] * B0 * zz
    brem = (1.0 + (d[:, 2 * M - 1] - d[:, 2 * M]) * zz) / 2.0
    rem = brem * (np.sqrt(1.0 + d[:, 2 * M] * zz / brem) - 1.0)
    An = A1 + rem * A0
    Bn = B1 + rem * B0
    return (An / Bn).real


def _hyperbola_params(half, sector):
    """``(log error, U, mu t, alpha)`` for ``2 half + 1`` nodes in a sector.

    The contour ``z = mu (1 + sin(i u - alpha))`` opens at ``pi/2 + alpha``;
    shifting ``u`` by ``i v`` changes ``alpha`` by ``v``, so a strip of width
    ``d = alpha`` keeps it inside the sector.  The error model balances the
    discretization term ``exp(mu t - 2 pi d half / U)`` against truncation at
    ``|u| = U`` and roundoff ``eps exp(mu t)``.
    """
    alpha = 0.5 * 0.95 * min(sector - math.pi / 2, math.pi / 2)
    best = None
    for U in np.linspace(0.5, 8.0, 301):
        grow = math.sin(alpha) * math.cosh(U)
        if grow < 1.2:
            continue
        mt = 36.0 / (grow - 1.0)
        err = mt + math.log(math.exp(-2.0 * math.pi * alpha * half / U) + 1e-16)
        if best is None or err < best[0]:
            best = (err, float(U), mt, alpha)
    return best


def hyperbolic(F, t, nodes=None, shift=0.0, sector=math.pi, tol=1e-13, max_nodes=4001):
    """Invert ``F`` on a hyperbola confined to ``|arg s| < sector``.

    With ``nodes=None`` the smallest node count whose predicted error is
    below ``tol`` is used (at most ``max_nodes``).
    """
    t = np.asarray(t, dtype=float)
    tt = t.reshape(-1, 1)
    if nodes is None:
        half = 16
        while True:
            err, U, mt, alpha = _hyperbola_params(half, sector)
            if math.exp(err) <= tol or 2 * half + 1 >= max_nodes:
                break
            half = int(half * 1.25) + 1
    else:
        half = nodes // 2
        err, U, mt, alpha = _hyperbola_params(half, sector)
    h = U / half
    u = np.arange(-half, half + 1) * h
    mu = mt / tt
    z = mu * (1.0 + np.sin(1j * u - alpha))
    dz = 1j * mu * np.cos(1j * u - alpha)
    w = np.exp(z * tt) * F(z + shift) * dz
    out = (h / (2j * np.pi)) * w.sum(axis=1) * np.exp(shift * tt[:, 0])
    return out.real.reshape(t.shape)


_RUNNERS = {"talbot_contour": talbot, "series_acceleration": dehoog}


def invert(image, t, policy: InversionPolicy | None = None):
    """Return ``f(t)`` for the image ``F = L[f]``.

    ``image`` is a :class:`LaplaceImage` or a bare callable (abscissa 0).
    ``t`` may be a scalar or an array of times, all ``>= policy.min_t``.

    Raises
    ------
    InversionUnstable
        If ``t < policy.min_t`` or the two methods disagree.
    """
    policy = policy or DEFAULT_INVERSION
    if not isinstance(image, LaplaceImage):
        image = LaplaceImage(image)
    tarr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(tarr)) or np.any(tarr <= 0):
        raise DomainError("inversion times must be positive and finite")
    if np.any(tarr < policy.min_t):
        raise InversionUnstable(
            f"inversion refused for t < {policy.min_t} (got min t = {tarr.min():g})")
    def run(name, times, nodes):
        if name == "talbot_contour" and image.sector < _TALBOT_REACH:
            return hyperbolic(image.eval, times, None, image.abscissa, image.sector)
        return _RUNNERS[name](image.eval, times, nodes, image.abscissa)

    def disagree(a, b, factor):
        scale = np.maximum(np.abs(a), np.abs(b))
        return ~(np.abs(a - b) <= factor * policy.target_rel_tol * scale + policy.abs_floor)

    main = np.array(run(policy.method, tarr, policy.nodes), dtype=float, ndmin=1)
    if policy.check:
        other_name = METHODS[1] if policy.method == METHODS[0] else METHODS[0]
        flat = tarr.ravel()
        main = main.ravel()
        other = np.array(run(other_name, flat, policy.nodes), dtype=float, ndmin=1)
        # refine wherever agreement is worse than the target, fail beyond 10x
        bad = np.nonzero(disagree(main, other, 1.0))[0]
        # singularities close to the contour: retry those times on finer rules
        for nodes in (policy.nodes * 3 // 2, 2 * policy.nodes):
            if bad.size == 0:
                break
            m2 = np.array(run(policy.method, flat[bad], nodes), ndmin=1)
            o2 = np.array(run(other_name, flat[bad], nodes), ndmin=1)
            better = np.abs(m2 - o2) < np.abs(main[bad] - other[bad])
            main[bad[better]] = m2[better]
            other[bad[better]] = o2[better]
            bad = bad[disagree(main[bad], other[bad], 1.0)]
        bad = bad[disagree(main[bad], other[bad], 10.0)]
        if bad.size:
            i = int(bad[0])
            raise InversionUnstable(
                f"{policy.method} and {other_name} disagree at t={flat[i]:g}: "
                f"{main[i]!r} vs {other[i]!r}")
        main = main.reshape(tarr.shape)
    if np.ndim(t) == 0:
        return float(main)
    return main
