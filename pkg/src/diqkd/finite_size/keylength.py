"""Finite-size key lengths for the four protocol variants.

All logarithms are base 2. ``eta(eps)`` is evaluated as ``log2(2/eps^2)``,
a slightly loose but numerically stable replacement for the exact form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..certifier.bounds import AffineEntropyBound
from .._search import bisect_root
from ..devices import HonestDeviceModel, depolarizing_model
from ..linalg import binary_entropy
from .stats import binom_cdf

Q_LO = (2.0 - math.sqrt(2.0)) / 4.0
Q_HI = (2.0 + math.sqrt(2.0)) / 4.0
LOG2_5 = math.log2(5.0)
DIM_GENERAL = 6.0   # |A B X Y| registers entering the EAT dimension terms
DIM_PRESHARED = 12.0
V_PRIME = 2.0 * math.log2(7.0)
BRACKET_TOL = 1e-12


def eta(eps: float) -> float:
    return math.log2(2.0 / eps ** 2)


@dataclass(frozen=True)
class Affine:
    """``f(w) = a + b w`` on CHSH winning probabilities."""

    a: float
    b: float

    def __call__(self, w: float) -> float:
        return self.a + self.b * w

    def shift(self, c: float) -> "Affine":
        return Affine(self.a + c, self.b)


def lin_in_w(bound: AffineEntropyBound) -> Affine:
    """Rewrite a bound affine in ``nu = 8w - 4`` as an :class:`Affine` in ``w``."""
    return Affine(bound.intercept - 4.0 * bound.slope, 8.0 * bound.slope)


def make_g(lin_p: AffineEntropyBound, lin_0: AffineEntropyBound, gamma: float) -> Affine:
    """Per-round tradeoff for the sifted protocol: ``(1-gamma)/2 lin_p + gamma lin_0``."""
    a, b = lin_in_w(lin_p), lin_in_w(lin_0)
    return Affine(0.5 * (1.0 - gamma) * a.a + gamma * b.a, 0.5 * (1.0 - gamma) * a.b + gamma * b.b)


def make_g_tilde(lin_p: AffineEntropyBound, lin_0: AffineEntropyBound, gamma: float) -> Affine:
    """Tradeoff for pre-shared inputs: ``(1-gamma) lin_p + gamma lin_0`` (no sifting factor)."""
    a, b = lin_in_w(lin_p), lin_in_w(lin_0)
    return Affine((1.0 - gamma) * a.a + gamma * b.a, (1.0 - gamma) * a.b + gamma * b.b)


def g_of_w(lin_p: AffineEntropyBound, lin_0: AffineEntropyBound, gamma: float, w: float) -> float:
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"w={w} outside [0, 1]")
    return make_g(lin_p, lin_0, gamma)(w)


# --- ledgers and inputs ---------------------------------------------------

@dataclass(frozen=True)
class EpsilonLedger:
    eps_ec_com: float
    eps_pe_com: float
    eps_ea: float
    eps_pa: float
    eps_h: float
    eps_s: float
    eps_s1: Optional[float] = None  # EAT smoothing splits; unused by the AEP variants
    eps_s2: Optional[float] = None

    def __post_init__(self):
        for name, v in self.__dict__.items():
            if v is not None and not 0.0 < v <= 1.0:
                raise ValueError(f"{name}={v} outside (0, 1]")

    def check_general(self):
        if self.eps_s1 is None or self.eps_s2 is None:
            raise ValueError("EAT key lengths need eps_s1 and eps_s2")
        if not self.eps_s > self.eps_s1 + 2.0 * self.eps_s2:
            raise ValueError("need eps_s > eps_s1 + 2 eps_s2")

    @property
    def eps_com(self) -> float:
        return self.eps_ec_com + self.eps_pe_com

    def soundness_general(self) -> float:
        return max(self.eps_ea, self.eps_pa + 2.0 * self.eps_s) + 2.0 * self.eps_h

    def soundness_collective(self, eps_iid: float) -> float:
        return max(eps_iid, self.eps_pa + 2.0 * self.eps_s) + 2.0 * self.eps_h

    def soundness_optcoll(self, eps_iid: float) -> float:
        return max(eps_iid, self.eps_pa + 2.0 * self.eps_s) + self.eps_h


@dataclass(frozen=True)
class FiniteSizeInputs:
    n: int
    gamma: float
    p: float
    delta_tol: float
    ec_max: int
    eps: EpsilonLedger
    alpha: float = 1.5
    alpha_prime: float = 1.1
    beta: float = 0.0
    delta_iid: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma={self.gamma} outside (0, 1]")
        if self.delta_tol <= 0.0:
            raise ValueError("delta_tol must be positive")
        if self.delta_iid < 0.0:
            raise ValueError("delta_iid must be nonnegative")

    def with_(self, **kw) -> "FiniteSizeInputs":
        return replace(self, **kw)


@dataclass(frozen=True)
class TradeoffStats:
    max_f: float
    min_f: float
    var_f_bound: float


def tradeoff_stats(g: Affine, gamma: float, beta: float) -> TradeoffStats:
    """Max, min and variance bound of the min-tradeoff function built from ``g``.

    ``f_min`` equals ``g(w)/gamma + (1 - 1/gamma) beta`` on test rounds won
    with frequency ``w`` and ``beta`` on generation rounds.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma={gamma} outside (0, 1]")
    g0, g1 = g(0.0), g(1.0)
    lo, hi = min(g0, g1), max(g0, g1)
    if not lo - BRACKET_TOL <= beta <= hi + BRACKET_TOL:
        raise ValueError(f"beta={beta} outside [{lo}, {hi}]")
    max_f = max(hi / gamma + (1.0 - 1.0 / gamma) * beta, beta)
    min_f = min(g(Q_LO), g(Q_HI))
    d0, d1 = (beta - g0) ** 2, (beta - g1) ** 2
    var = (Q_LO * min(d0, d1) + Q_HI * max(d0, d1)) / gamma
    return TradeoffStats(max_f, min_f, var)


def _spread(stats: TradeoffStats, dim: float) -> float:
    return 2.0 * math.log2(dim) + stats.max_f - stats.min_f


def v_and_k(stats: TradeoffStats, alpha: float, dim: float = DIM_GENERAL):
    """EAT second- and third-order constants ``(V, K_alpha)``.

    ``dim`` is the size of the register alphabet (6 for the sifted protocol,
    12 with pre-shared inputs).
    """
    if not 1.0 < alpha < 2.0:
        raise ValueError(f"alpha={alpha} outside (1, 2)")
    v = math.sqrt(stats.var_f_bound + 2.0) + math.log2(2.0 * dim ** 2 + 1.0)
    s = _spread(stats, dim)
    log_term = float(np.logaddexp(s * math.log(2.0), 2.0))  # ln(2^s + e^2)
    k = 2.0 ** ((alpha - 1.0) * s) / (6.0 * (2.0 - alpha) ** 3 * math.log(2.0)) * log_term ** 3
    return v, k


# --- general attacks (EAT) ------------------------------------------------

@dataclass(frozen=True)
class KeyLengthTerms:
    """Every term of an EAT key length; ``total`` is the unrounded key length."""

    leading: float
    second_order: float
    third_order: float
    testing: float
    alpha_prime_term: float
    smoothing: float
    ea: float
    ec: float
    hashing: float
    pa: float

    @property
    def total(self) -> float:
        return (self.leading - self.second_order - self.third_order - self.testing
                - self.alpha_prime_term - self.smoothing - self.ea - self.ec
                - self.hashing - self.pa + 2.0)


def _eat_terms(inp: FiniteSizeInputs, g: Affine, w_exp: float, dim: float) -> KeyLengthTerms:
    e = inp.eps
    e.check_general()
    a, a2 = inp.alpha, inp.alpha_prime
    if not 1.0 < a2 < 1.0 + 2.0 / V_PRIME:
        raise ValueError(f"alpha_prime={a2} outside (1, 1 + 2/V')")
    stats = tradeoff_stats(g, inp.gamma, inp.beta)
    v, k = v_and_k(stats, a, dim)
    n = inp.n
    return KeyLengthTerms(
        leading=n * g(w_exp - inp.delta_tol),
        second_order=n * (a - 1.0) * math.log(2.0) / 2.0 * v ** 2,
        third_order=n * (a - 1.0) ** 2 * k ** 2,
        testing=n * inp.gamma,
        alpha_prime_term=n * (a2 - 1.0) / 4.0 * V_PRIME ** 2,
        smoothing=(eta(e.eps_s1) / (a - 1.0) + eta(e.eps_s2) / (a2 - 1.0)
                   + 3.0 * eta(e.eps_s - e.eps_s1 - 2.0 * e.eps_s2)),
        ea=(a / (a - 1.0) + a2 / (a2 - 1.0) - 2.0) * math.log2(1.0 / e.eps_ea),
        ec=float(inp.ec_max),
        hashing=float(math.ceil(math.log2(1.0 / e.eps_h))),
        pa=2.0 * math.log2(1.0 / e.eps_pa),
    )


def key_length_general_terms(inp: FiniteSizeInputs, g: Affine, w_exp: float) -> KeyLengthTerms:
    return _eat_terms(inp, g, w_exp, DIM_GENERAL)


def key_length_general_raw(inp: FiniteSizeInputs, g: Affine, w_exp: float) -> float:
    """Unrounded general-attack key length (may be negative)."""
    return _eat_terms(inp, g, w_exp, DIM_GENERAL).total


def key_length_general(inp: FiniteSizeInputs, g: Affine, w_exp: float) -> int:
    """General-attack key length in bits, floored and clamped at 0."""
    return max(0, math.floor(key_length_general_raw(inp, g, w_exp)))


def key_length_preshared_raw(inp: FiniteSizeInputs, g_tilde: Affine, w_exp: float) -> float:
    """Gross key length with pre-shared inputs; the tradeoff is ``1 + g_tilde``.

    ``inp.beta`` must lie in ``[1 + g_tilde(0), 1 + g_tilde(1)]``. The
    pre-shared seed (``n`` bits) is not subtracted here.
    """
    return _eat_terms(inp, g_tilde.shift(1.0), w_exp, DIM_PRESHARED).total


def key_length_preshared(inp: FiniteSizeInputs, g_tilde: Affine, w_exp: float) -> int:
    return max(0, math.floor(key_length_preshared_raw(inp, g_tilde, w_exp)))


# --- collective attacks (AEP) ----------------------------------------------

def eps_iid_collective(n: int, gamma: float, w_exp: float, delta_tol: float, delta_iid: float) -> float:
    return binom_cdf(n, 1.0 - (w_exp - delta_tol - delta_iid) * gamma,
                     math.floor((1.0 - (w_exp - delta_tol) * gamma) * n))


def _aep_correction(n_eff: float, eps_s: float) -> float:
    return math.sqrt(n_eff) * 2.0 * LOG2_5 * math.sqrt(math.log2(2.0 / eps_s ** 2))


def key_length_collective_raw(inp: FiniteSizeInputs, g: Affine, w_exp: float):
    """``(unrounded bits, eps_iid)`` for collective attacks."""
    e = inp.eps
    if not 0.0 <= inp.delta_iid < w_exp - inp.delta_tol:
        raise ValueError("need 0 <= delta_iid < w_exp - delta_tol")
    n = inp.n
    bits = (n * g(w_exp - inp.delta_tol - inp.delta_iid) - _aep_correction(n, e.eps_s)
            - inp.ec_max - math.ceil(math.log2(1.0 / e.eps_h)) - 2.0 * math.log2(1.0 / e.eps_pa) + 2.0)
    return bits, eps_iid_collective(n, inp.gamma, w_exp, inp.delta_tol, inp.delta_iid)


def key_length_collective(inp: FiniteSizeInputs, g: Affine, w_exp: float):
    bits, eps_iid = key_length_collective_raw(inp, g, w_exp)
    return max(0, math.floor(bits)), eps_iid


# --- optimized collective (fixed-size test subset) ------------------------

def n_test_rounds(n: int, gamma: float) -> int:
    return int(round(gamma * n))


def eps_iid_optcoll(m: int, w_exp: float, delta_tol: float, delta_iid: float) -> float:
    return binom_cdf(m, 1.0 - w_exp + delta_tol + delta_iid, math.floor((1.0 - w_exp + delta_tol) * m))


def eps_pe_optcoll(m: int, w_exp: float, delta_tol: float) -> float:
    return binom_cdf(m, w_exp, math.floor((w_exp - delta_tol) * m))


def key_length_optcoll_raw(inp: FiniteSizeInputs, lin_p: Affine, w_exp: float):
    """``(unrounded bits, eps_iid, eps_pe_com)`` with a test subset of exactly ``round(gamma n)`` rounds.

    ``lin_p`` is the unsifted bound in ``w``; ``inp.ec_max`` must already be
    sized for the generation rounds only.
    """
    e = inp.eps
    if not 0.0 <= inp.delta_iid < w_exp - inp.delta_tol:
        raise ValueError("need 0 <= delta_iid < w_exp - delta_tol")
    m = n_test_rounds(inp.n, inp.gamma)
    n_gen = inp.n - m
    bits = (n_gen * lin_p(w_exp - inp.delta_tol - inp.delta_iid) - _aep_correction(n_gen, e.eps_s)
            - inp.ec_max - math.ceil(math.log2(1.0 / e.eps_h)) - 2.0 * math.log2(1.0 / e.eps_pa) + 2.0)
    if m < 1:
        return bits, 1.0, 1.0
    return bits, eps_iid_optcoll(m, w_exp, inp.delta_tol, inp.delta_iid), eps_pe_optcoll(m, w_exp, inp.delta_tol)


def key_length_optcoll(inp: FiniteSizeInputs, lin_p: Affine, w_exp: float):
    bits, eps_iid, eps_pe = key_length_optcoll_raw(inp, lin_p, w_exp)
    return max(0, math.floor(bits)), eps_iid, eps_pe


# --- asymptotics ------------------------------------------------------------

def asymptotic_rate(lin_p: AffineEntropyBound, model: HonestDeviceModel, protocol: str = "standard") -> float:
    """Infinite-``n`` key rate per round; the sifted protocol pays a factor 1/2."""
    r = lin_p.at_w(model.w_exp) - binary_entropy(model.key_error)
    if protocol == "standard":
        return 0.5 * r
    if protocol == "preshared":
        return r
    raise ValueError(f"unknown protocol {protocol!r}")


def noise_threshold(lin_p: AffineEntropyBound, p: float, tol: float = 1e-6) -> float:
    """Largest depolarizing noise ``q`` with a nonnegative asymptotic rate (0 if none)."""
    def rate(q):
        return asymptotic_rate(lin_p, depolarizing_model(q, p))

    if rate(0.0) < 0.0:
        return 0.0
    if rate(Q_LO) >= 0.0:
        return Q_LO
    return bisect_root(rate, 0.0, Q_LO, tol)
