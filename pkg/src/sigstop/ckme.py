"""Conditional kernel mean embeddings and rank-1 / rank-2 (rank-r) signature MMDs.

The conditional embedding of a path at time ``t_p`` is estimated by kernel
ridge regression of its full-path kernel feature on its prefix, so the inner
product of two estimated embeddings is

    G_xx[p,p]^T (G_xx[p,p] + m lam I)^{-1} G_xy[T,T] (G_yy[q,q] + n lam I)^{-1} G_yy[q,q].

The embedded paths ``t -> x~_t`` live in the RKHS of the signature kernel;
their own (time-augmented) signature kernel is again a Goursat solve, driven
by the mixed second differences of those inner products plus ``dt_p ds_q``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import linalg

from ._pde import solve_batch
from .errors import NumericalError
from .goursat import (DEFAULT_REFINE, DEFAULT_SCHEME, GramTensor, _check_refine,
                      _check_scheme, check_pair, first_order_gram, gram_from_increments)
from .paths import Ensemble, double_difference

JITTER_LADDER = (1e-10, 1e-8, 1e-6)
MAX_RANK = 3
_BATCH = 1 << 16


@dataclass(frozen=True)
class LambdaSchedule:
    """``lam(M) = c * M**(-power)``; the default power 0.4 decays slower than ``M**-0.5``."""

    c: float = 1.0
    power: float = 0.4

    def __call__(self, size: int) -> float:
        return self.c * size ** (-self.power)


Lambda = Union[float, LambdaSchedule, Callable[[int], float]]


def resolve_lambda(lam: Lambda, size: int) -> float:
    value = float(lam(size)) if callable(lam) else float(lam)
    if not np.isfinite(value) or value < 0:
        raise ValueError(f"lambda must be finite and >= 0, got {value!r}")
    return value


@dataclass
class MMDEstimate:
    d2: float
    rank: int
    mode: str
    lam: Optional[float] = None
    sample_sizes: tuple = (0, 0)
    jitter: float = 0.0
    meta: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.d2


def prefix_weights(slices: np.ndarray, lam: float, axis: str = "p") -> tuple[np.ndarray, float]:
    """``L[p] = (G_p + m lam I)^{-1} G_p`` for each prefix Gram slice ``G_p`` (m x m).

    Uses Cholesky solves.  When ``lam > 0`` a failed factorisation is retried
    with jitter ``1e-10, 1e-8, 1e-6`` (relative to the mean diagonal); the
    largest jitter applied is returned alongside the weights.  ``axis``
    ("p" for the first ensemble, "q" for the second) only labels errors.
    """
    where = "({}, *)" if axis == "p" else "(*, {})"
    P1, m, _ = slices.shape
    out = np.empty_like(slices)
    worst = 0.0
    eye = np.eye(m)
    for p in range(P1):
        G = slices[p]
        A = G + m * lam * eye
        try:
            fac = linalg.cho_factor(A, lower=True, check_finite=False)
            used = 0.0
        except linalg.LinAlgError:
            if lam == 0:
                raise NumericalError(
                    f"singular prefix Gram at (p, q) = {where.format(p)} with lambda=0") from None
            scale = max(float(np.mean(np.diag(A))), 1e-300)
            fac = None
            for j in JITTER_LADDER:
                try:
                    fac = linalg.cho_factor(A + j * scale * eye, lower=True, check_finite=False)
                    used = j
                    break
                except linalg.LinAlgError:
                    continue
            if fac is None:
                raise NumericalError(
                    f"prefix Gram at (p, q) = {where.format(p)} not positive definite after jitter "
                    f"{JITTER_LADDER[-1]}") from None
        if not np.all(np.isfinite(fac[0])):
            raise NumericalError(f"non-finite Cholesky factor at (p, q) = {where.format(p)}")
        out[p] = linalg.cho_solve(fac, G, check_finite=False)
        worst = max(worst, used)
    if worst:
        warnings.warn(f"prefix Gram needed jitter {worst:g}", RuntimeWarning, stacklevel=2)
    return out, worst


def _self_slices(G: GramTensor) -> np.ndarray:
    if not G.full:
        raise ValueError("conditional embeddings need full Gram tensors")
    m, n = G.sample_sizes
    if m != n:
        raise ValueError("self Gram tensor must be square in the sample index")
    return G.diagonal_slices()


def _check_triplet(Gxx: GramTensor, Gxy: GramTensor, Gyy: GramTensor) -> None:
    m, n = Gxy.sample_sizes
    if Gxx.sample_sizes != (m, m) or Gyy.sample_sizes != (n, n):
        raise ValueError(
            f"incompatible sample sizes {Gxx.sample_sizes}, {Gxy.sample_sizes}, {Gyy.sample_sizes}")
    if Gxx.full and Gyy.full and Gxy.full:
        if Gxy.data.shape[:2] != (Gxx.data.shape[0], Gyy.data.shape[0]):
            raise ValueError("Gram tensors live on incompatible grids")


def _inner_block(Lx: np.ndarray, K: np.ndarray, Ly: np.ndarray, rows: slice) -> np.ndarray:
    """Rows ``rows`` of ``Lx[p]^T K Ly[q]`` for all ``(p, q)``: shape ``(P+1, Q+1, r, n)``."""
    T = np.matmul(np.transpose(Lx[:, :, rows], (0, 2, 1)), K)
    return np.matmul(T[:, None], Ly[None])


def cond_kme_inner_products(Gxx: GramTensor, Gxy: GramTensor, Gyy: GramTensor,
                            lam: Lambda) -> np.ndarray:
    """``m4[i, j, p, q] = <x~^i_{t_p}, y~^j_{s_q}>`` as an ``(m, n, P+1, Q+1)`` array."""
    _check_triplet(Gxx, Gxy, Gyy)
    m, n = Gxy.sample_sizes
    Lx, _ = prefix_weights(_self_slices(Gxx), resolve_lambda(lam, m))
    Ly, _ = prefix_weights(_self_slices(Gyy), resolve_lambda(lam, n), "q")
    m4 = _inner_block(Lx, Gxy.terminal, Ly, slice(None))
    return np.moveaxis(m4, (0, 1), (2, 3))


def lift(Lx: np.ndarray, K: np.ndarray, Ly: np.ndarray, dtx: np.ndarray, dty: np.ndarray,
         full: bool, refine: int, scheme: str) -> np.ndarray:
    """Signature kernel of the embedded paths from prefix weights and a terminal Gram ``K``.

    Returns ``(P+1, Q+1, m, n)`` prefix values when ``full`` else ``(m, n)``.
    Rows of ``m`` are processed in blocks so the inner-product tensor is never
    held in full.
    """
    m, n = K.shape
    P, Q = dtx.size, dty.size
    tt = np.multiply.outer(dtx, dty)[:, :, None, None]
    out = np.empty((P + 1, Q + 1, m, n)) if full else np.empty((m, n))
    step = max(1, _BATCH // n)
    for i0 in range(0, m, step):
        i1 = min(m, i0 + step)
        m4 = _inner_block(Lx, K, Ly, slice(i0, i1))
        inc = double_difference(np.moveaxis(m4, (0, 1), (2, 3)))
        inc = np.moveaxis(inc, (2, 3), (0, 1)) + tt
        if not np.all(np.isfinite(inc)):
            raise NumericalError("non-finite embedded increments")
        res = solve_batch(inc.reshape(P, Q, -1), refine, scheme, full)
        if full:
            out[:, :, i0:i1] = res.reshape(P + 1, Q + 1, i1 - i0, n)
        else:
            out[i0:i1] = res.reshape(i1 - i0, n)
    return out


def _time_increments(G: GramTensor, axis: str, grid) -> np.ndarray:
    if grid is not None:
        return np.diff(getattr(grid, "points", np.asarray(grid, dtype=np.float64)))
    times = G.times_x if axis == "x" else G.times_y
    if times is None:
        raise ValueError("Gram tensor carries no grid; pass grid_x / grid_y")
    return np.diff(times)


def second_order_gram(Gxx: GramTensor, Gxy: GramTensor, Gyy: GramTensor, lam: Lambda,
                      refine: int = DEFAULT_REFINE, scheme: str = DEFAULT_SCHEME,
                      full: bool = False, grid_x=None, grid_y=None):
    """Rank-2 signature kernel ``k(x~^i, y~^j)`` of the estimated embedding paths.

    Returns an ``m x n`` matrix, or a full :class:`GramTensor` of prefix pairs
    when ``full`` is true.
    """
    refine = _check_refine(refine)
    _check_scheme(scheme)
    _check_triplet(Gxx, Gxy, Gyy)
    m, n = Gxy.sample_sizes
    Lx, _ = prefix_weights(_self_slices(Gxx), resolve_lambda(lam, m))
    Ly, _ = prefix_weights(_self_slices(Gyy), resolve_lambda(lam, n), "q")
    dtx = _time_increments(Gxy, "x", grid_x)
    dty = _time_increments(Gxy, "y", grid_y)
    if dtx.size + 1 != Lx.shape[0] or dty.size + 1 != Ly.shape[0]:
        raise ValueError("grid lengths do not match the Gram tensors")
    res = lift(Lx, Gxy.terminal, Ly, dtx, dty, full, refine, scheme)
    if full:
        tx = Gxy.times_x if grid_x is None else np.cumsum(np.r_[0.0, dtx])
        ty = Gxy.times_y if grid_y is None else np.cumsum(np.r_[0.0, dty])
        return GramTensor(res, True, tx, ty)
    return res


def mmd_from_grams(Kxx, Kxy, Kyy, mode: str = "unbiased") -> float:
    """Squared MMD from kernel matrices: U-statistic (``unbiased``) or V-statistic (``biased``)."""
    Kxx, Kxy, Kyy = (np.asarray(a, dtype=np.float64) for a in (Kxx, Kxy, Kyy))
    m, n = Kxy.shape
    if Kxx.shape != (m, m) or Kyy.shape != (n, n):
        raise ValueError(f"incompatible shapes {Kxx.shape}, {Kxy.shape}, {Kyy.shape}")
    cross = Kxy.sum() / (m * n)
    if mode == "biased":
        return float(Kxx.sum() / m**2 + Kyy.sum() / n**2 - 2.0 * cross)
    if mode == "unbiased":
        if m < 2 or n < 2:
            raise ValueError("the unbiased estimator needs at least 2 samples per side")
        xx = (Kxx.sum() - np.trace(Kxx)) / (m * (m - 1))
        yy = (Kyy.sum() - np.trace(Kyy)) / (n * (n - 1))
        return float(xx + yy - 2.0 * cross)
    raise ValueError(f"mode must be 'unbiased' or 'biased', got {mode!r}")


def first_order_mmd(X: Ensemble, Y: Ensemble, mode: str = "unbiased",
                    refine: int = DEFAULT_REFINE, scheme: str = DEFAULT_SCHEME) -> MMDEstimate:
    """Rank-1 signature MMD (squared) from terminal first-order Grams."""
    check_pair(X, Y)
    Kxx = first_order_gram(X, X, False, refine, scheme).terminal
    Kxy = first_order_gram(X, Y, False, refine, scheme).terminal
    Kyy = first_order_gram(Y, Y, False, refine, scheme).terminal
    return MMDEstimate(mmd_from_grams(Kxx, Kxy, Kyy, mode), 1, mode, None, (len(X), len(Y)))


def second_order_mmd(X: Ensemble, Y: Ensemble, lam: Lambda = 1e-3, mode: str = "unbiased",
                     refine: int = DEFAULT_REFINE, scheme: str = DEFAULT_SCHEME) -> MMDEstimate:
    """Rank-2 signature MMD (squared); the same samples train and average the embeddings."""
    check_pair(X, Y)
    Gxx = first_order_gram(X, X, True, refine, scheme)
    Gxy = first_order_gram(X, Y, True, refine, scheme)
    Gyy = first_order_gram(Y, Y, True, refine, scheme)
    K2xx = second_order_gram(Gxx, Gxx, Gxx, lam, refine, scheme)
    K2xy = second_order_gram(Gxx, Gxy, Gyy, lam, refine, scheme)
    K2yy = second_order_gram(Gyy, Gyy, Gyy, lam, refine, scheme)
    lx, ly = resolve_lambda(lam, len(X)), resolve_lambda(lam, len(Y))
    return MMDEstimate(mmd_from_grams(K2xx, K2xy, K2yy, mode), 2, mode,
                       lx if lx == ly else (lx, ly), (len(X), len(Y)))


def rank_r_gram(X: Ensemble, Y: Ensemble, r: int, lam: Lambda = 1e-3,
                refine: int = DEFAULT_REFINE, scheme: str = DEFAULT_SCHEME) -> np.ndarray:
    """Terminal ``m x n`` Gram of the rank-``r`` embedding, ``1 <= r <= 3``.

    Rank ``k + 1`` conditions the rank-``k`` kernel features on the rank-``k``
    prefixes; ``r = 2`` reproduces :func:`second_order_gram`.
    """
    if int(r) != r or r < 1:
        raise ValueError(f"rank must be a positive integer, got {r!r}")
    if r > MAX_RANK:
        raise ValueError(f"rank {r} exceeds the supported maximum {MAX_RANK}")
    check_pair(X, Y)
    if r == 1:
        return first_order_gram(X, Y, False, refine, scheme).terminal
    Gxx = first_order_gram(X, X, True, refine, scheme)
    Gxy = first_order_gram(X, Y, True, refine, scheme)
    Gyy = first_order_gram(Y, Y, True, refine, scheme)
    for _ in range(r - 2):
        Gxx, Gxy, Gyy = (second_order_gram(Gxx, Gxx, Gxx, lam, refine, scheme, full=True),
                         second_order_gram(Gxx, Gxy, Gyy, lam, refine, scheme, full=True),
                         second_order_gram(Gyy, Gyy, Gyy, lam, refine, scheme, full=True))
    return second_order_gram(Gxx, Gxy, Gyy, lam, refine, scheme)


class EmbeddedEnsemble:
    """Per-ensemble quantities reused across many pairwise MMD evaluations.

    Holds the increments, the prefix weights and the self Gram matrices at
    rank 1 and rank 2, so a pairwise rank-2 MMD only needs the cross terms.
    """

    def __init__(self, ens: Ensemble, lam: Lambda = 1e-3, refine: int = DEFAULT_REFINE,
                 scheme: str = DEFAULT_SCHEME, rank: int = 2):
        if not ens.augmented:
            raise ValueError("embedding expects a time-augmented ensemble")
        if rank not in (1, 2):
            raise ValueError("rank must be 1 or 2")
        self.ensemble = ens
        self.refine = _check_refine(refine)
        self.scheme = _check_scheme(scheme)
        self.rank = rank
        self.dx = ens.increments
        self.dt = ens.grid.increments
        self.lam = resolve_lambda(lam, len(ens))
        G = gram_from_increments(self.dx, self.dx, rank == 2, self.refine, self.scheme)
        if rank == 1:
            self.K1 = G
            self.L = None
            self.K2 = None
            self.jitter = 0.0
            return
        self.K1 = G[-1, -1].copy()
        P1 = G.shape[0]
        self.L, self.jitter = prefix_weights(G[np.arange(P1), np.arange(P1)], self.lam)
        self.K2 = lift(self.L, self.K1, self.L, self.dt, self.dt, False, self.refine, self.scheme)

    def __len__(self) -> int:
        return len(self.ensemble)

    def cross(self, other: "EmbeddedEnsemble") -> tuple[np.ndarray, Optional[np.ndarray]]:
        """Rank-1 and (if available) rank-2 cross Gram matrices against ``other``."""
        if self.ensemble.dim != other.ensemble.dim:
            raise ValueError("dimension mismatch between ensembles")
        if (self.refine, self.scheme) != (other.refine, other.scheme):
            raise ValueError("ensembles were embedded with different solver settings")
        K1 = gram_from_increments(self.dx, other.dx, False, self.refine, self.scheme)
        if self.rank == 1 or other.rank == 1:
            return K1, None
        K2 = lift(self.L, K1, other.L, self.dt, other.dt, False, self.refine, self.scheme)
        return K1, K2

    def mmd(self, other: "EmbeddedEnsemble", mode: str = "unbiased") -> dict:
        """Squared MMDs keyed by rank."""
        K1, K2 = self.cross(other)
        out = {1: mmd_from_grams(self.K1, K1, other.K1, mode)}
        if K2 is not None:
            out[2] = mmd_from_grams(self.K2, K2, other.K2, mode)
        return out
