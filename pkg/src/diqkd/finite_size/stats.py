"""Binomial tail probabilities used for completeness and IID soundness terms."""
from __future__ import annotations

import math

import numpy as np
from scipy.special import bdtr, ndtr

EXACT_MAX_N = 10 ** 6


def _g_div(x: float, p: float) -> float:
    """Binary KL divergence in nats, with ``0 ln 0 = 0``."""
    out = 0.0
    if x > 0.0:
        out += x * math.log(x / p)
    if x < 1.0:
        out += (1.0 - x) * math.log((1.0 - x) / (1.0 - p))
    return max(out, 0.0)


def zs_bound(n: int, p: float, k: int) -> float:
    """Zubkov-Serov normal approximation ``Phi(sign(k/n - p) sqrt(2 n G(k/n, p)))``.

    For ``1 <= k <= n-1`` it satisfies
    ``zs_bound(n,p,k) <= binom_cdf(n,p,k) <= zs_bound(n,p,k+1)``.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p={p} must lie strictly inside (0, 1)")
    x = k / n
    z = math.sqrt(2.0 * n * _g_div(x, p))
    if x < p:
        z = -z
    return float(ndtr(z))


def binom_cdf(n: int, p: float, k: int) -> float:
    """``Pr[X <= k]`` for ``X ~ Bin(n, p)``.

    Exact (regularized incomplete beta) up to ``n = 10**6``; above that the
    upper bound ``zs_bound(n, p, k + 1)``.
    """
    n = int(n)
    k = int(k)
    if k < 0:
        return 0.0
    if k >= n:
        return 1.0
    if p <= 0.0:
        return 1.0
    if p >= 1.0:
        return 0.0
    if n <= EXACT_MAX_N:
        return float(bdtr(k, n, p))
    return zs_bound(n, p, k + 1)


def chernoff_pe(n: int, gamma: float, w_exp: float, delta_tol: float):
    """Multiplicative Chernoff bounds for the two parameter-estimation tails."""
    if delta_tol > w_exp:
        raise ValueError("need delta_tol / w_exp <= 1")
    e = n * gamma * delta_tol ** 2 / w_exp
    return math.exp(-e / 2.0), math.exp(-e / 3.0)


def pe_tail_terms(n: int, gamma: float, w_exp: float, delta_tol: float):
    """The two binomial terms of the parameter-estimation completeness bound.

    A negative floor in the second term is clamped to 0 (conservative).
    """
    k_win = math.floor((w_exp - delta_tol) * gamma * n)
    k_other = max(0, math.floor((1.0 - gamma + w_exp * gamma - delta_tol * gamma) * n))
    return (binom_cdf(n, gamma * w_exp, k_win),
            binom_cdf(n, 1.0 - gamma + gamma * w_exp, k_other))


def completeness_pe_general(n: int, gamma: float, w_exp: float, delta_tol: float) -> float:
    """Probability that honest devices fail the win/loss frequency checks (union bound)."""
    a, b = pe_tail_terms(n, gamma, w_exp, delta_tol)
    return a + b


def min_delta_for(target: float, f, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Smallest ``delta`` in ``[lo, hi]`` with ``f(delta) <= target`` for decreasing ``f``.

    Returns ``math.inf`` if even ``hi`` fails.
    """
    if f(hi) > target:
        return math.inf
    if f(lo) <= target:
        return lo
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if f(mid) <= target:
            hi = mid
        else:
            lo = mid
    return hi


def estimation_aborts(wins, losses, n: int, gamma: float, w_exp: float, delta_tol: float):
    """Whether parameter estimation rejects; works elementwise on arrays.

    Accepting needs ``wins >= (w_exp - delta_tol) gamma n`` and
    ``losses <= (1 - w_exp + delta_tol) gamma n``.
    """
    wins = np.asarray(wins)
    losses = np.asarray(losses)
    return (wins < (w_exp - delta_tol) * gamma * n) | (losses > (1.0 - w_exp + delta_tol) * gamma * n)
