"""Discrete power-law fitting for degree distributions.

Fits ``p(k) ~ k**-alpha`` for ``k >= k_min``. The exponent uses the closed-form
approximation ``1 + n / sum(ln(k_i / (k_min - 1/2)))``; ``k_min`` minimizes the
Kolmogorov-Smirnov distance to the Hurwitz-zeta normalized model, and
plausibility comes from a semi-parametric bootstrap of the KS statistic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import zeta

log = logging.getLogger(__name__)

MIN_TAIL = 10
MIN_BOOTSTRAP_SAMPLES = 50
DEFAULT_REPS = 2500
SIGNIFICANCE = 0.05


@dataclass
class PowerLawFit:
    alpha: float
    k_min: int
    n_tail: int
    n: int
    ks_stat: float
    p_value: float | None = None
    is_scale_free: bool = False
    warning: str | None = None
    reps: int = 0

    @property
    def tail_fraction(self) -> float:
        return self.n_tail / self.n if self.n else 0.0


def alpha_mle(tail, k_min: int) -> float:
    tail = np.asarray(tail, dtype=np.float64)
    s = np.log(tail / (k_min - 0.5)).sum()
    return 1.0 + len(tail) / s if s > 0 else math.inf


def model_cdf(x, alpha: float, k_min: int):
    """P(K <= x) for the discrete power law on k >= k_min."""
    x = np.asarray(x, dtype=np.float64)
    z = zeta(alpha, k_min)
    out = 1.0 - zeta(alpha, np.maximum(x + 1, k_min)) / z
    return np.where(x < k_min, 0.0, out)


def ks_statistic(tail, alpha: float, k_min: int, weights=None) -> float:
    """Sup over integers of |empirical CDF - model CDF| on the tail.

    Both CDFs are right-continuous step functions on the integers. Between two
    observed values the empirical CDF is flat while the model rises, so the sup
    is attained at an observed value u or at u - 1. ``weights`` gives a
    (possibly fractional) multiplicity per entry of ``tail``.
    """
    tail = np.asarray(tail)
    w = np.ones(tail.shape) if weights is None else np.asarray(weights, dtype=np.float64)
    keep = tail >= k_min
    tail, w = tail[keep], w[keep]
    if tail.size == 0 or w.sum() <= 0:
        return math.nan
    u, inv = np.unique(tail, return_inverse=True)
    c = np.bincount(inv, weights=w)
    n = c.sum()
    cum = np.cumsum(c) / n
    before = cum - c / n
    z0 = zeta(alpha, k_min)
    zu = zeta(alpha, u.astype(np.float64))
    f_at = 1.0 - (zu - u.astype(np.float64) ** -alpha) / z0
    f_below = 1.0 - zu / z0
    return float(max(np.abs(cum - f_at).max(), np.abs(before - f_below).max()))


_BERNOULLI = (1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730, 7.0 / 6)


@njit(cache=True)
def hurwitz_zeta(s, a):
    """Hurwitz zeta(s, a) for s > 1, a > 0 by Euler-Maclaurin summation."""
    total = 0.0
    x = a
    shift = max(12.0, s + 10.0)
    while x < shift:
        total += x ** -s
        x += 1.0
    total += x ** (1.0 - s) / (s - 1.0) + 0.5 * x ** -s
    fact = s * x ** (-s - 1.0)
    denom = 2.0
    x2 = x * x
    for j in range(1, 8):
        total += _BERNOULLI[j - 1] / denom * fact
        fact *= (s + 2 * j - 1) * (s + 2 * j) / x2
        denom *= (2 * j + 1) * (2 * j + 2)
    return total


@njit(cache=True)
def _scan_kernel(u, c, min_tail):
    m = u.shape[0]
    n_tail = np.zeros(m, dtype=np.int64)
    logsum = np.zeros(m)
    acc_n = 0
    acc_l = 0.0
    for i in range(m - 1, -1, -1):
        acc_n += c[i]
        acc_l += c[i] * np.log(u[i])
        n_tail[i] = acc_n
        logsum[i] = acc_l
    best_i = -1
    best_a = np.nan
    best_ks = np.inf
    for i in range(m - 1):
        if n_tail[i] < min_tail:
            break
        denom = logsum[i] - n_tail[i] * np.log(u[i] - 0.5)
        a = 1.0 + n_tail[i] / denom
        z0 = hurwitz_zeta(a, u[i])
        nt = n_tail[i]
        cum = 0
        ks = 0.0
        for j in range(i, m):
            zu = hurwitz_zeta(a, u[j])
            f_below = 1.0 - zu / z0
            d = abs(cum / nt - f_below)
            if d > ks:
                ks = d
            cum += c[j]
            f_at = 1.0 - (zu - u[j] ** -a) / z0
            d = abs(cum / nt - f_at)
            if d > ks:
                ks = d
            if ks >= best_ks:
                break
        if ks < best_ks:
            best_ks = ks
            best_i = i
            best_a = a
    return best_i, best_a, best_ks


def _scan(data: np.ndarray, min_tail: int = MIN_TAIL):
    """Best (k_min, alpha, ks, n_tail) over the observed support, or None.

    Candidates need ``min_tail`` samples and at least two distinct values at or
    above k_min. A candidate's KS pass stops early once it cannot beat the best
    so far.
    """
    u, c = np.unique(data, return_counts=True)
    if len(u) < 2:
        return None
    i, alpha, ks = _scan_kernel(u.astype(np.float64), c.astype(np.int64), int(min_tail))
    if i < 0:
        return None
    return int(u[i]), float(alpha), float(ks), int(c[i:].sum())


MAX_DRAW = 2.0 ** 53  # beyond this integers are no longer exact in float64


def invert_survival(alpha, z0, surv, lo, hi):
    """Smallest integer x with zeta(alpha, x + 1) / z0 <= surv.

    Starts from brackets with S(lo + 1) > surv; grows ``hi`` by doubling, then
    bisects. Draws are capped at 2**53.
    """
    lo = np.asarray(lo, dtype=np.float64).copy()
    hi = np.asarray(hi, dtype=np.float64).copy()
    while True:
        grow = (zeta(alpha, hi + 1) / z0 > surv) & (hi < MAX_DRAW)
        if not grow.any():
            break
        lo = np.where(grow, hi, lo)
        hi = np.where(grow, np.minimum(np.maximum(2 * hi, hi + 1), MAX_DRAW), hi)
    while True:
        mid = np.floor((lo + hi) / 2)
        active = (hi - lo > 1) & (mid > lo) & (mid < hi)
        if not active.any():
            break
        ok = zeta(alpha, mid + 1) / z0 <= surv
        hi = np.where(active & ok, mid, hi)
        lo = np.where(active & ~ok, mid, lo)
    return hi


class _TailSampler:
    """Inverse-CDF sampler for the discrete power law via a lookup table."""

    def __init__(self, alpha: float, k_min: int, max_table: int = 1_000_000, eps: float = 1e-7):
        self.alpha, self.k_min = alpha, k_min
        z = zeta(alpha, k_min)
        size = 1024
        while True:
            x = np.arange(k_min, k_min + size, dtype=np.float64)
            cdf = np.cumsum(x ** -alpha) / z
            if 1.0 - cdf[-1] < eps or size >= max_table:
                break
            size *= 4
        self.cdf = cdf
        self.z = z

    def _exact(self, r: np.ndarray) -> np.ndarray:
        # smallest x with CDF(x) >= r, by doubling then bisection on the zeta survival
        lo = np.full(r.shape, float(self.k_min + len(self.cdf) - 1))
        return invert_survival(self.alpha, self.z, 1.0 - r, lo, lo * 2)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        r = rng.random(n)
        idx = np.searchsorted(self.cdf, r, side="left")
        out = (self.k_min + idx).astype(np.int64)
        over = idx >= len(self.cdf)
        if over.any():
            out[over] = self._exact(r[over]).astype(np.int64)
        return out


def sample_power_law(n: int, alpha: float, k_min: int, rng: np.random.Generator) -> np.ndarray:
    return _TailSampler(alpha, k_min).sample(n, rng)


def replicate_rng(seed: int, window_id: int, replicate: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(window_id), int(replicate)])


def fit_power_law(
    degrees,
    bootstrap_reps: int = DEFAULT_REPS,
    seed: int = 0,
    window_id: int = 0,
    min_tail: int = MIN_TAIL,
    min_samples: int = MIN_BOOTSTRAP_SAMPLES,
) -> PowerLawFit:
    """Fit a discrete power law to the positive entries of ``degrees``.

    The bootstrap runs only with at least ``min_samples`` positive values and
    ``bootstrap_reps > 0``; otherwise ``p_value`` is None. Replicate ``r`` draws
    from its own generator seeded by ``(seed, window_id, r)``.
    """
    data = np.asarray(degrees, dtype=np.int64)
    data = np.sort(data[data > 0])
    n = data.size
    if n == 0:
        raise ValueError("no positive degrees to fit")

    best = _scan(data, min_tail)
    if best is None:
        k_min = int(data[0])
        tail = data
        alpha = alpha_mle(tail, k_min)
        ks = ks_statistic(tail, alpha, k_min) if math.isfinite(alpha) else math.nan
        return PowerLawFit(alpha, k_min, int(n), int(n), ks, None, False,
                           warning=f"no k_min candidate with >= {min_tail} samples over two or more distinct values")
    k_min, alpha, ks, n_tail = best

    if bootstrap_reps <= 0 or n < min_samples:
        return PowerLawFit(alpha, k_min, n_tail, int(n), ks, None, False)

    body = data[data < k_min]
    p_tail = n_tail / n
    sampler = _TailSampler(alpha, k_min)
    exceed = 0
    for r in range(bootstrap_reps):
        rng = replicate_rng(seed, window_id, r)
        m_tail = int(rng.binomial(n, p_tail)) if body.size else n
        synth = np.concatenate([sampler.sample(m_tail, rng), rng.choice(body, n - m_tail)]) \
            if body.size else sampler.sample(n, rng)
        synth.sort()
        res = _scan(synth, min_tail)
        if res is None or res[2] > ks:
            exceed += 1
    p = exceed / bootstrap_reps
    return PowerLawFit(alpha, k_min, n_tail, int(n), ks, p, p >= SIGNIFICANCE, reps=bootstrap_reps)
