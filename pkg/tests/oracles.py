"""Independent reference computations and random samplers shared by the tests."""
import math

import mpmath
import numpy as np
from scipy.optimize import minimize_scalar

from diqkd.certifier.objective import LagrangeVector, ObjectiveSpec
from diqkd.certifier.state import random_blocks

mpmath.mp.dps = 40


def exact_binom_cdf(n, p, k):
    """``Pr[Bin(n, p) <= k]`` by direct summation at 40 digits.

    Sums the shorter side of the distribution, walking away from ``k``
    until terms stop contributing.
    """
    if k < 0:
        return mpmath.mpf(0)
    if k >= n:
        return mpmath.mpf(1)
    p = mpmath.mpf(p)
    q = 1 - p

    def pmf(i):
        return mpmath.binomial(n, i) * p ** i * q ** (n - i)

    if k < n * p:
        term = pmf(k)
        total = term
        i = k
        while i > 0:
            term *= i / (n - i + mpmath.mpf(1)) * q / p
            i -= 1
            total += term
            if term < total * mpmath.mpf(10) ** -38:
                break
        return total
    term = pmf(k + 1)
    tail = term
    i = k + 1
    while i < n:
        term *= (n - i) / (i + mpmath.mpf(1)) * p / q
        i += 1
        tail += term
        if term < tail * mpmath.mpf(10) ** -38:
            break
    return 1 - tail


def exact_upper_tail(n, p, k):
    """``Pr[Bin(n, p) >= k]``."""
    return 1 - exact_binom_cdf(n, p, k - 1)


def brute_force_block_min(cblocks):
    """Minimise u(phi)^T C_k u(phi) over a fine angle grid, then polish each block."""
    best = math.inf
    phis = np.linspace(0.0, math.pi, 721)
    for c in cblocks:
        def f(phi):
            u = np.array([math.cos(phi), math.sin(phi)])
            return float(u @ c @ u)

        vals = [f(x) for x in phis]
        i = int(np.argmin(vals))
        res = minimize_scalar(f, bounds=(phis[i] - 0.01, phis[i] + 0.01), method="bounded",
                              options=dict(xatol=1e-12))
        best = min(best, res.fun, min(vals))
    return best


# --- samplers ---------------------------------------------------------------

def random_triples(count, seed=0):
    """``(n, p, k)`` with ``n <= 10**4`` and ``0 < k < n``."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(2, 10 ** 4 + 1))
        p = float(rng.uniform(0.01, 0.99))
        k = int(rng.integers(1, n))
        out.append((n, p, k))
    return out


def random_cost(rng):
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    return 0.5 * (g + g.conj().T)


def interior_blocks(rng):
    b = random_blocks(rng)
    return 0.9 * b + 0.1 * np.array([np.eye(2), np.eye(2)]) / 4.0


def random_spec(rng):
    lam = LagrangeVector(*rng.normal(size=4))
    w0 = rng.uniform(0, 1)
    return ObjectiveSpec(lam, (w0, rng.uniform(0, 1 - w0)), rng.uniform(0, 0.5))


def random_angles(rng):
    tb = rng.uniform(0, math.pi)
    return rng.uniform(0, math.pi), (math.cos(tb), math.sin(tb))
