"""One-dimensional search helpers shared by the optimizers."""
from __future__ import annotations

import math
from typing import Callable

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float = 1e-6):
    """Minimise a unimodal ``f`` on ``[a, b]`` without leaving the interval.

    ``scipy.optimize.golden`` treats its bracket as a starting guess only,
    which is unsafe when ``f`` is undefined outside ``[a, b]``.

    Returns ``(x, f(x))`` for the best point evaluated, endpoints included.
    """
    fa, fb = f(a), f(b)
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = f(c), f(d)
    best = min((fa, a), (fb, b), (fc, c), (fd, d))
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = f(c)
            best = min(best, (fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = f(d)
            best = min(best, (fd, d))
    return best[1], best[0]


def bisect_root(f: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Last point where ``f >= 0`` for ``f`` positive at ``lo`` and negative at ``hi``."""
    flo, fhi = f(lo), f(hi)
    if flo < 0 or fhi >= 0:
        raise ValueError(f"no sign change on [{lo}, {hi}]: f={flo:.3g}, {fhi:.3g}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return lo
