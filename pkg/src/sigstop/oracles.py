"""Reference pricers: CRR lattice, Black-Scholes European put, Longstaff-Schwartz.

Geometric basket reduction
--------------------------
For ``d`` independent GBMs with common volatility ``sigma`` and equal start
``s0``, the log of the geometric mean is

    log G_t = log s0 + (r - sigma^2 / 2) t + (sigma / d) sum_i W^i_t,

a Brownian motion with variance ``sigma^2 t / d``.  Writing it as a 1-d GBM
with volatility ``sigma_eff = sigma / sqrt(d)`` and dividend yield ``q`` needs
``r - q - sigma_eff^2 / 2 = r - sigma^2 / 2``, i.e.
``q = (sigma^2 / 2)(1 - 1/d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import norm

from .errors import NumericalError


@dataclass(frozen=True)
class ReducedBs:
    sigma_eff: float
    div_yield: float


def geometric_reduction(d: int, sigma: float, r: float = 0.0) -> ReducedBs:
    """1-d Black-Scholes parameters of the geometric mean of ``d`` iid GBMs.

    ``r`` does not enter the result; it is accepted for call-site symmetry.
    """
    if int(d) != d or d < 1:
        raise ValueError(f"d must be a positive integer, got {d!r}")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    return ReducedBs(sigma / math.sqrt(d), 0.5 * sigma**2 * (1.0 - 1.0 / d))


def crr_american_put(s0: float, K: float, r: float, q: float, sigma: float, T: float,
                     depth: int) -> float:
    """American put on a Cox-Ross-Rubinstein lattice of ``depth`` steps.

    ``O(depth^2)`` time and ``O(depth)`` memory.
    """
    if int(depth) != depth or depth < 1:
        raise ValueError(f"depth must be a positive integer, got {depth!r}")
    if sigma < 0 or T <= 0 or s0 <= 0 or K <= 0:
        raise ValueError("need sigma >= 0, T > 0, s0 > 0, K > 0")
    depth = int(depth)
    dt = T / depth
    disc = math.exp(-r * dt)
    if sigma == 0.0:
        # deterministic spot: best exercise date on the lattice
        t = np.arange(depth + 1) * dt
        pay = np.maximum(K - s0 * np.exp((r - q) * t), 0.0) * np.exp(-r * t)
        return float(pay.max())
    u = math.exp(sigma * math.sqrt(dt))
    dn = 1.0 / u
    p = (math.exp((r - q) * dt) - dn) / (u - dn)
    if not 0.0 <= p <= 1.0:
        raise NumericalError(
            f"risk-neutral probability {p:.6g} outside [0, 1]; increase depth "
            f"(currently {depth}) so that |r - q| dt < sigma sqrt(dt)")
    j = np.arange(depth + 1)
    values = np.maximum(K - s0 * u ** (2.0 * j - depth), 0.0)
    pu, pd = disc * p, disc * (1.0 - p)
    for i in range(depth - 1, -1, -1):
        values = pd * values[: i + 1] + pu * values[1: i + 2]
        spot = s0 * u ** (2.0 * np.arange(i + 1) - i)
        np.maximum(values, K - spot, out=values)
    return float(values[0])


def _d1d2(s0, K, r, q, sigma, T):
    if sigma <= 0 or T <= 0:
        raise ValueError("need sigma > 0 and T > 0")
    v = sigma * math.sqrt(T)
    d1 = (math.log(s0 / K) + (r - q + 0.5 * sigma**2) * T) / v
    return d1, d1 - v


def bs_european_put(s0: float, K: float, r: float, q: float, sigma: float, T: float) -> float:
    d1, d2 = _d1d2(s0, K, r, q, sigma, T)
    return float(K * math.exp(-r * T) * norm.cdf(-d2) - s0 * math.exp(-q * T) * norm.cdf(-d1))


def bs_european_call(s0: float, K: float, r: float, q: float, sigma: float, T: float) -> float:
    d1, d2 = _d1d2(s0, K, r, q, sigma, T)
    return float(s0 * math.exp(-q * T) * norm.cdf(d1) - K * math.exp(-r * T) * norm.cdf(d2))


def polynomial_basis(x: np.ndarray, degree: int) -> np.ndarray:
    """``1, x_i`` and, for degree 2, every ``x_i x_j`` with ``i <= j``."""
    n, d = x.shape
    cols = [np.ones(n)] + [x[:, i] for i in range(d)]
    if degree == 2:
        cols += [x[:, i] * x[:, j] for i in range(d) for j in range(i, d)]
    return np.column_stack(cols)


@dataclass
class LSResult:
    price: float
    std_error: float
    exercise_share: float
    fallback_dates: list = field(default_factory=list)

    def __float__(self) -> float:
        return self.price


def longstaff_schwartz(values, times, payoff: Callable, r: float, degree: int = 2,
                       features: Optional[Callable] = None, split: bool = False,
                       itm_only: bool = True) -> LSResult:
    """Least-squares Monte Carlo value of a Bermudan option exercisable on ``times``.

    ``values`` is ``(n, N + 1, d)`` undiscounted paths; ``payoff(state, k)``
    maps the ``(n, d)`` state at date ``k`` to payoffs.  The continuation value
    is regressed on a degree-1/2 polynomial of ``features(values, k)`` (default:
    the current state) over in-the-money paths.  Dates with fewer in-the-money
    paths than basis functions skip the regression and continue.  With
    ``split`` the policy is fitted on the first half of the paths and priced on
    the second half.  Payoffs that can be negative (stopping a signed process)
    need ``itm_only=False``: every path then enters the regression and may be
    stopped.
    """
    vals = np.asarray(getattr(values, "values", values), dtype=np.float64)
    if vals.ndim == 2:
        vals = vals[:, :, None]
    times = np.asarray(getattr(times, "points", times), dtype=np.float64)
    if vals.shape[1] != times.size:
        raise ValueError("values and times disagree on the number of dates")
    if degree not in (1, 2):
        raise ValueError("degree must be 1 or 2")
    feats = features or (lambda v, k: v[:, k])
    if split:
        half = vals.shape[0] // 2
        if half < 1:
            raise ValueError("split pricing needs at least 2 paths")
        policy, _, _ = _ls_fit(vals[:half], times, payoff, r, degree, feats, itm_only)
        cash, early = _ls_apply(vals[half:], times, payoff, r, degree, feats, policy, itm_only)
    else:
        policy, cash, early = _ls_fit(vals, times, payoff, r, degree, feats, itm_only)
    fallback = [k for k in range(vals.shape[1] - 1) if k not in policy]
    n = cash.size
    se = float(cash.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return LSResult(float(cash.mean()), se, float(early.mean()), fallback)


def _discounted(payoff, vals, times, k, r):
    disc = math.exp(-r * (times[k] - times[0]))
    return np.asarray(payoff(vals[:, k], k), dtype=np.float64) * disc


def _ls_fit(vals, times, payoff, r, degree, feats, itm_only=True):
    """Backward induction on ``vals``; returns the per-date regression
    coefficients together with the in-sample cash flows."""
    n, N1, _ = vals.shape
    N = N1 - 1
    cash = _discounted(payoff, vals, times, N, r)
    early = np.zeros(n, dtype=bool)
    policy = {}
    for k in range(N - 1, -1, -1):
        now = _discounted(payoff, vals, times, k, r)
        itm = now > 0 if itm_only else np.ones(n, dtype=bool)
        basis = polynomial_basis(np.asarray(feats(vals, k)).reshape(n, -1), degree)
        if itm.sum() < basis.shape[1]:
            continue
        B = basis[itm]
        scale = np.max(np.abs(B), axis=0)
        scale[scale == 0] = 1.0
        coef, *_ = np.linalg.lstsq(B / scale, cash[itm], rcond=1e-10)
        policy[k] = coef / scale
        ex = np.zeros(n, dtype=bool)
        ex[itm] = now[itm] > B @ policy[k]
        cash = np.where(ex, now, cash)
        early |= ex
    return policy, cash, early


def _ls_apply(vals, times, payoff, r, degree, feats, policy, itm_only=True):
    n, N1, _ = vals.shape
    N = N1 - 1
    cash = _discounted(payoff, vals, times, N, r)
    early = np.zeros(n, dtype=bool)
    for k in range(N - 1, -1, -1):
        if k not in policy:
            continue
        now = _discounted(payoff, vals, times, k, r)
        basis = polynomial_basis(np.asarray(feats(vals, k)).reshape(n, -1), degree)
        ex = now > basis @ policy[k]
        if itm_only:
            ex &= now > 0
        cash = np.where(ex, now, cash)
        early |= ex
    return cash, early
