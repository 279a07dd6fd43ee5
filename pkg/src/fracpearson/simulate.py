"""Monte Carlo for time-changed Pearson diffusions.

Each path owns two counter-based Philox streams keyed by
``SeedSequence(seed, spawn_key=(path_id, k))``: ``k = 0`` drives the stable
clock and ``k = 1`` the initial state and Brownian motion.  A path is
therefore a pure function of ``(seed, path_id, config)``, independent of the
ensemble size and of how work is split across threads.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateVariance, DomainError, HorizonTooShort
from .pearson import PearsonClass, PearsonModel, classify, stationary_law
from .subordinator import StableMixture

__all__ = [
    "SimConfig",
    "PathEnsemble",
    "path_rngs",
    "sample_stable_increment",
    "sample_mixture_path",
    "invert_path",
    "sample_pearson_path",
    "simulate_ensemble",
    "empirical_corr",
    "empirical_mean",
    "read_binary",
]

SCHEMES = ("exact_ou", "euler_reflected")
MAGIC = b"FPEN1"


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo settings.

    ``dtau`` is the operational-clock step; ``horizon`` the initial operational
    horizon, which is extended block by block (never truncated) until the
    subordinator passes the last observation time.  ``euler_reflected`` keeps
    the state inside its interval by full truncation of the coefficients.
    """

    n_paths: int
    observation_times: tuple
    seed: int = 0
    dtau: float = 1e-3
    horizon: float = 1.0
    scheme: str = "exact_ou"
    threads: int | None = None

    def __post_init__(self):
        times = tuple(float(t) for t in np.atleast_1d(self.observation_times))
        object.__setattr__(self, "observation_times", times)
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise DomainError("n_paths must be a positive integer")
        if not times or any(t < 0 or not math.isfinite(t) for t in times):
            raise DomainError("observation_times must be finite and nonnegative")
        if any(b < a for a, b in zip(times, times[1:])):
            raise DomainError("observation_times must be sorted")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if not (self.dtau > 0 and self.horizon > 0):
            raise DomainError("dtau and horizon must be positive")
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class PathEnsemble:
    """Clock values ``E`` and states ``X`` of shape ``(n_paths, n_times)``."""

    times: np.ndarray
    E: np.ndarray
    X: np.ndarray
    seed: int
    config_hash: str
    meta: dict = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return self.E.shape[0]

    def column(self, t, which="X"):
        j = np.nonzero(self.times == float(t))[0]
        if j.size == 0:
            raise DomainError(f"t={t} is not an observation time")
        return getattr(self, which)[:, j[0]]

    def to_csv(self, path):
        """Long format ``path_id,t,E,X``; floats written with ``repr`` (round-trip exact)."""
        n, m = self.E.shape
        with open(path, "w", newline="\n") as fh:
            fh.write("path_id,t,E,X\n")
            for i in range(n):
                for j in range(m):
                    fh.write(f"{i},{float(self.times[j])!r},{float(self.E[i, j])!r},"
                             f"{float(self.X[i, j])!r}\n")

    def to_binary(self, path):
        """``FPEN1`` + u64 n_paths + u64 n_times + f8 times + f8 E + f8 X (little endian, row-major)."""
        n, m = self.E.shape
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<QQ", n, m))
            fh.write(np.ascontiguousarray(self.times, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(self.E, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(self.X, dtype="<f8").tobytes())


def read_binary(path):
    """Inverse of :meth:`PathEnsemble.to_binary`; returns ``(times, E, X)``."""
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise DomainError("not an FPEN1 file")
        n, m = struct.unpack("<QQ", fh.read(16))
        times = np.frombuffer(fh.read(8 * m), dtype="<f8")
        E = np.frombuffer(fh.read(8 * n * m), dtype="<f8").reshape(n, m)
        X = np.frombuffer(fh.read(8 * n * m), dtype="<f8").reshape(n, m)
    return times, E, X


def path_rngs(seed: int, path_id: int):
    """``(clock_rng, noise_rng)`` for one path."""
    return tuple(
        np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(path_id), k))))
        for k in (0, 1))


# ---------------------------------------------------------------------------
# stable clock
# ---------------------------------------------------------------------------

def _standard_stable(beta, rng, size):
    """Kanter's representation of the positive stable law with ``E e^{-sS} = e^{-s^beta}``."""
    u = rng.random(size)
    w = rng.standard_exponential(size)
    pu = np.pi * u
    # log A(u), A = sin(b pi u)^(b/(1-b)) sin((1-b) pi u) / sin(pi u)^(1/(1-b))
    loga = (beta / (1.0 - beta) * np.log(np.sin(beta * pu)) + np.log(np.sin((1.0 - beta) * pu))
            - np.log(np.sin(pu)) / (1.0 - beta))
    return np.exp((1.0 - beta) / beta * (loga - np.log(w)))


def sample_stable_increment(beta: float, dt: float, rng, size=None):
    """Increment over ``dt`` of a standard ``beta``-stable subordinator: ``dt^(1/beta) S``."""
    if not 0.0 < beta < 1.0:
        raise DomainError("beta must lie in (0,1)")
    if not dt > 0:
        raise DomainError("dt must be positive")
    out = dt ** (1.0 / beta) * _standard_stable(beta, rng, size)
    return float(out) if size is None else out


def _mixture_increments(mix, dtau, rng, size):
    cs, bs = mix.active()
    inc = np.zeros(size)
    for c, b in zip(cs, bs):
        inc += (c * dtau) ** (1.0 / b) * _standard_stable(b, rng, size)
    return inc


def sample_mixture_path(mix: StableMixture, cfg: SimConfig, rng, until: float | None = None):
    """``D(tau_j)`` on ``tau_j = j dtau`` with ``D(0) = 0``.

    ``D = sum_i c_i^(1/b_i) D^i`` has independent components.  Blocks of
    ``horizon / dtau`` steps are appended until ``D`` exceeds ``until``
    (default: the last observation time).
    """
    until = cfg.observation_times[-1] if until is None else float(until)
    block = max(1, int(math.ceil(cfg.horizon / cfg.dtau)))
    parts = [np.zeros(1)]
    level = 0.0
    while True:
        inc = _mixture_increments(mix, cfg.dtau, rng, block)
        path = level + np.cumsum(inc)
        parts.append(path)
        level = float(path[-1])
        if level > until:
            return np.concatenate(parts)


def invert_path(D_path, observation_times, tau=1.0):
    """First passage ``E(t) = inf{tau : D(tau) > t}`` interpolated linearly.

    ``tau`` is either the grid step or the full grid matching ``D_path``.
    """
    D = np.asarray(D_path, dtype=float)
    t = np.asarray(observation_times, dtype=float)
    grid = np.arange(D.size) * float(tau) if np.ndim(tau) == 0 else np.asarray(tau, dtype=float)
    if grid.shape != D.shape:
        raise DomainError("tau grid and D_path differ in length")
    if np.any(np.diff(D) < 0):
        raise DomainError("D_path must be nondecreasing")
    if t.size and t.max() >= D[-1]:
        raise HorizonTooShort(f"D reaches only {D[-1]:g} < {t.max():g}")
    k = np.searchsorted(D, t, side="right")
    lo, hi = D[k - 1], D[k]
    frac = np.where(hi > lo, (t - lo) / np.where(hi > lo, hi - lo, 1.0), 0.0)
    E = grid[k - 1] + frac * (grid[k] - grid[k - 1])
    return np.maximum.accumulate(E) if E.ndim else E


# ---------------------------------------------------------------------------
# Pearson states on the clock
# ---------------------------------------------------------------------------

def sample_pearson_path(model: PearsonModel, clock_values, cfg: SimConfig, rng, x0=None):
    """``X_1(E(t_j))`` given clock values ``E(t_j)``.

    The start is drawn from the stationary law unless ``x0`` is given.
    Hermite models with ``scheme="exact_ou"`` use the Gaussian transition;
    otherwise Euler-Maruyama runs on sub-steps no longer than ``dtau`` with
    coefficients evaluated at the state clamped to the interval (full
    truncation), and the clamped state is reported.
    """
    E = np.asarray(clock_values, dtype=float)
    law = stationary_law(model)
    x = float(law.sample(None, rng)) if x0 is None else float(x0)
    dE = np.diff(E, prepend=0.0)
    if np.any(dE < 0):
        raise DomainError("clock values must be nondecreasing")
    out = np.empty(E.size)
    if cfg.scheme == "exact_ou" and classify(model) is PearsonClass.HERMITE:
        decay = np.exp(model.a1 * dE)
        sd = np.sqrt(law.variance * (1.0 - decay * decay))
        z = rng.standard_normal(E.size)
        for j in range(E.size):
            x = law.mean + decay[j] * (x - law.mean) + sd[j] * z[j]
            out[j] = x
        return out
    if cfg.scheme == "exact_ou":
        raise DomainError("exact_ou needs a Hermite (Ornstein-Uhlenbeck) model")
    lo, hi = model.state_interval
    a0, a1, d0, d1, d2 = model.a0, model.a1, model.d0, model.d1, model.d2
    for j in range(E.size):
        m = int(math.ceil(dE[j] / cfg.dtau)) if dE[j] > 0 else 0
        if m:
            h = dE[j] / m
            sq = math.sqrt(h)
            z = rng.standard_normal(m)
            for k in range(m):
                xc = min(max(x, lo), hi)
                diff = d0 + xc * (d1 + d2 * xc)
                x = x + (a0 + a1 * xc) * h + math.sqrt(2.0 * max(diff, 0.0)) * sq * z[k]
        out[j] = min(max(x, lo), hi)
    return out


def _one_path(model, mix, cfg, i):
    clock_rng, noise_rng = path_rngs(cfg.seed, i)
    D = sample_mixture_path(mix, cfg, clock_rng)
    E = invert_path(D, cfg.observation_times, cfg.dtau)
    X = sample_pearson_path(model, E, cfg, noise_rng)
    return E, X, D.size - 1


def _thread_count(cfg):
    if cfg.threads is not None:
        return max(1, int(cfg.threads))
    env = os.environ.get("FRACPEARSON_THREADS")
    if env:
        return max(1, int(env))
    return 1


def simulate_ensemble(model: PearsonModel, mix: StableMixture, cfg: SimConfig) -> PathEnsemble:
    """Simulate ``cfg.n_paths`` independent steady-state paths.

    Work is split across ``cfg.threads`` (or ``FRACPEARSON_THREADS``) threads;
    results are written by path index so the output does not depend on it.
    """
    if cfg.scheme == "exact_ou" and classify(model) is not PearsonClass.HERMITE:
        raise DomainError("exact_ou needs a Hermite (Ornstein-Uhlenbeck) model")
    n, m = cfg.n_paths, len(cfg.observation_times)
    E = np.empty((n, m))
    X = np.empty((n, m))
    steps = np.empty(n, dtype=np.int64)

    def work(idx):
        for i in idx:
            E[i], X[i], steps[i] = _one_path(model, mix, cfg, i)

    workers = _thread_count(cfg)
    chunks = np.array_split(np.arange(n), max(1, min(n, 8 * workers)))
    if workers == 1:
        for c in chunks:
            work(c)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, chunks))
    meta = {"max_steps": int(steps.max()), "mean_steps": float(steps.mean()), "threads": workers}
    return PathEnsemble(np.asarray(cfg.observation_times), E, X, int(cfg.seed), cfg.digest(), meta)


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

def empirical_corr(ensemble: PathEnsemble, t: float, s: float):
    """Sample correlation of ``X(t), X(s)`` across paths with a delta-method standard error.

    The standard error uses the influence function
    ``z_x z_y - r (z_x^2 + z_y^2) / 2`` of the correlation coefficient, valid
    without normality.
    """
    if ensemble.n_paths < 100:
        raise DomainError("empirical_corr needs at least 100 paths")
    x = ensemble.column(t)
    y = ensemble.column(s)
    if float(t) == float(s):
        return 1.0, 0.0
    sx, sy = x.std(), y.std()
    scale = max(np.abs(x).max(), np.abs(y).max(), 1.0)
    if sx <= 1e-12 * scale or sy <= 1e-12 * scale:
        raise DegenerateVariance(f"sample variance vanishes at t={t} or s={s}")
    zx = (x - x.mean()) / sx
    zy = (y - y.mean()) / sy
    r = float(np.mean(zx * zy))
    infl = zx * zy - 0.5 * r * (zx * zx + zy * zy)
    return r, float(infl.std(ddof=1) / math.sqrt(x.size))


def empirical_mean(values):
    """Sample mean and its standard error."""
    v = np.asarray(values, dtype=float)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))
