"""Seeded simulators for the experiments: multi-dimensional GBM and fBm.

Random streams
--------------
Every path has its own Philox-4x64 stream keyed by ``(seed, path_index)``
(two unsigned 64-bit words).  Inside a path the standard normals are drawn in
time-major order, ``(step, coordinate)``.  Because streams are keyed rather
than consumed sequentially, the first ``k`` paths of an ensemble do not
depend on how many paths are drawn, and the output is identical on every
platform numpy supports.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import NumericalError
from .paths import Ensemble, TimeGrid, augment_ensemble

_MASK = (1 << 64) - 1


def path_stream(seed: int, index: int) -> np.random.Generator:
    """Generator for path ``index`` of the ensemble drawn with ``seed``."""
    if seed < 0 or index < 0:
        raise ValueError("seed and path index must be nonnegative")
    key = np.array([seed & _MASK, index & _MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(seed: int, *labels: int) -> int:
    """Deterministic child seed, e.g. one per model of an experiment."""
    ss = np.random.SeedSequence([seed, *labels])
    return int(ss.generate_state(1, np.uint64)[0])


def normals(seed: int, n: int, shape: tuple) -> np.ndarray:
    out = np.empty((n, *shape))
    for i in range(n):
        out[i] = path_stream(seed, i).standard_normal(shape)
    return out


@dataclass(frozen=True)
class GbmParams:
    d: int
    s0: object = 100.0
    r: float = 0.02
    sigma: float = 0.2

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d!r}")
        s0 = np.broadcast_to(np.asarray(self.s0, dtype=np.float64), (self.d,))
        if np.any(s0 <= 0) or not np.all(np.isfinite(s0)):
            raise ValueError("initial prices must be positive and finite")
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError(f"sigma must be >= 0, got {self.sigma!r}")
        object.__setattr__(self, "s0", tuple(float(v) for v in s0))


@dataclass(frozen=True)
class FbmParams:
    hurst: float
    grid: TimeGrid

    def __post_init__(self):
        if not 0 < self.hurst <= 1:
            raise ValueError(f"Hurst exponent must lie in (0, 1], got {self.hurst!r}")


def sample_gbm(p: GbmParams, grid: TimeGrid, n: int, seed: int) -> Ensemble:
    """Exact draws of ``S_t = s0 exp((r - sigma^2/2)(t - t0) + sigma W_{t-t0})``, coordinates independent."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    dt = grid.increments
    z = normals(seed, int(n), (dt.size, p.d))
    logret = (p.r - 0.5 * p.sigma**2) * dt[None, :, None] + p.sigma * np.sqrt(dt)[None, :, None] * z
    logs = np.concatenate([np.zeros((n, 1, p.d)), np.cumsum(logret, axis=1)], axis=1)
    vals = np.asarray(p.s0)[None, None, :] * np.exp(logs)
    return Ensemble(grid, vals, False, seed, {"model": "gbm", "sigma": p.sigma, "r": p.r})


def fbm_covariance(times: np.ndarray, hurst: float) -> np.ndarray:
    s = times[:, None]
    t = times[None, :]
    h2 = 2.0 * hurst
    return 0.5 * (s**h2 + t**h2 - np.abs(s - t) ** h2)


def fbm_factor(times: np.ndarray, hurst: float, jitter: float = 1e-12) -> np.ndarray:
    """Lower Cholesky factor of the fBm covariance at ``times`` (all > 0)."""
    C = fbm_covariance(times, hurst)
    try:
        return linalg.cholesky(C, lower=True)
    except linalg.LinAlgError:
        pass
    try:
        return linalg.cholesky(C + jitter * np.eye(times.size), lower=True)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"fBm covariance not factorisable for H={hurst}") from exc


def sample_fbm(p: FbmParams, n: int, seed: int, augment: bool = True) -> Ensemble:
    """Exact Gaussian draws of fBm on ``p.grid`` (which must start at 0)."""
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    times = p.grid.points
    if times[0] != 0.0:
        raise ValueError("fBm grids must start at t = 0")
    L = fbm_factor(times[1:], p.hurst)
    z = normals(seed, int(n), (times.size - 1,))
    vals = np.zeros((n, times.size))
    vals[:, 1:] = z @ L.T
    ens = Ensemble(p.grid, vals[:, :, None], False, seed, {"model": "fbm", "hurst": p.hurst})
    return augment_ensemble(ens) if augment else ens


def geometric_put(values, strike: float) -> np.ndarray:
    """``max(K - (prod x_i)^(1/d), 0)`` over the last axis, geometric mean in log space."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim == 0:
        x = x[None]
    if np.any(x <= 0):
        raise ValueError("geometric put needs strictly positive prices")
    gm = np.exp(np.mean(np.log(x), axis=-1))
    return np.maximum(strike - gm, 0.0)
