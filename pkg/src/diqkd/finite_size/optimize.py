"""Parameter choice for the finite-size key lengths.

For each theorem the free parameters are the test probability ``gamma``,
the epsilon ledger, and the Renyi orders ``alpha``, ``alpha'``. Tolerances
``delta_tol`` and ``delta_iid`` are derived as the smallest values meeting
their epsilon budgets, ``beta`` sits just below the top of its bracket.
The ledger is searched by coordinate descent on log10 grids; ``gamma`` and
``alpha`` by golden section in log space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional

import numpy as np

from .._search import golden_section
from ..certifier.bounds import AffineEntropyBound, paper_bound
from ..devices import (EcModel, HonestDeviceModel, ec_max, h_hon, h_hon_generation_only,
                       h_hon_preshared)
from .keylength import (V_PRIME, EpsilonLedger, FiniteSizeInputs, eta, key_length_collective_raw,
                        key_length_general_raw, key_length_optcoll_raw, key_length_preshared_raw,
                        lin_in_w, make_g, make_g_tilde, eps_iid_collective, eps_iid_optcoll,
                        eps_pe_optcoll, n_test_rounds, tradeoff_stats, v_and_k, DIM_GENERAL, DIM_PRESHARED)
from .stats import completeness_pe_general, min_delta_for

THEOREMS = ("general", "preshared", "collective", "optcoll")
BETA_OFFSET = 1e-6
EPS_FLOOR_LOG10 = -15.0
GAMMA_LOG10_MIN = -9.0
GAMMA_LOG10_TOL = 2e-3
ALPHA_LOG_TOL = 1e-3


@dataclass
class OptResult:
    """Best key length found and the inputs achieving it.

    ``inputs`` is ``None`` when no admissible configuration exists.
    """

    bits: int
    inputs: Optional[FiniteSizeInputs]
    theorem: str
    raw: float = -math.inf
    soundness: float = math.nan
    completeness: float = math.nan
    diagnostics: dict = field(default_factory=dict)

    @property
    def rate(self) -> float:
        return self.bits / self.inputs.n if self.inputs is not None else 0.0


@lru_cache(maxsize=100_000)
def _delta_general(n: int, gamma: float, w_exp: float, eps_pe: float) -> float:
    return min_delta_for(eps_pe, lambda d: completeness_pe_general(n, gamma, w_exp, d), 0.0, w_exp, 1e-10)


@lru_cache(maxsize=100_000)
def _delta_optcoll(m: int, w_exp: float, eps_pe: float) -> float:
    return min_delta_for(eps_pe, lambda d: eps_pe_optcoll(m, w_exp, d), 0.0, w_exp, 1e-10)


def _best_alpha(n: int, v: float, stats, dim: float, smooth: float) -> float:
    """Maximise ``-n(a-1) ln2/2 V^2 - n(a-1)^2 K_a^2 - smooth/(a-1)`` over ``a`` in (1, 2).

    Seeded at the optimum of the first two terms only.
    """
    def loss(la):
        x = math.exp(la)
        k = v_and_k(stats, 1.0 + x, dim)[1]
        return n * x * math.log(2.0) / 2.0 * v ** 2 + n * x ** 2 * k ** 2 + smooth / x

    seed = math.sqrt(2.0 * smooth / (n * math.log(2.0) * v ** 2))
    hi = math.log(0.999)
    centre = min(math.log(seed), hi)
    la, _ = golden_section(loss, centre - 4.0, min(centre + 4.0, hi), ALPHA_LOG_TOL)
    return 1.0 + math.exp(la)


def best_alpha_prime(n: int, smooth: float) -> float:
    """Exact maximiser of ``-n(a'-1)V'^2/4 - smooth/(a'-1)``, kept inside ``(1, 1+2/V')``."""
    x = 2.0 * math.sqrt(smooth / n) / V_PRIME
    return 1.0 + min(x, (2.0 / V_PRIME) * (1.0 - 1e-9))


# --- ledger parameterisations --------------------------------------------

def _eat_ledger(targets, c):
    """EAT ledger from coordinates ``(eps_h, eps_pa, eps_s1, eps_s2, eps_ec)``.

    ``eps_ea`` and ``eps_s`` take what is left of the soundness budget, so
    ``max(eps_ea, eps_pa + 2 eps_s) + 2 eps_h`` equals it exactly.
    """
    eps_sou, eps_com = targets
    eps_h, eps_pa, s1, s2, eps_ec = c
    eps_ea = eps_sou - 2.0 * eps_h
    if eps_ea <= 0.0 or eps_pa >= eps_ea or eps_ec >= eps_com:
        return None
    eps_s = 0.5 * (eps_ea - eps_pa)
    if s1 + 2.0 * s2 >= eps_s:
        return None
    return EpsilonLedger(eps_ec, eps_com - eps_ec, eps_ea, eps_pa, eps_h, eps_s, s1, s2)


def _aep_ledger(targets, c, hashing_weight):
    """AEP ledger from ``(eps_h, eps_pa, eps_ec)``; ``eps_ea`` holds the IID budget."""
    eps_sou, eps_com = targets
    eps_h, eps_pa, eps_ec = c
    budget = eps_sou - hashing_weight * eps_h
    if budget <= 0.0 or eps_pa >= budget or eps_ec >= eps_com:
        return None
    return EpsilonLedger(eps_ec, eps_com - eps_ec, budget, eps_pa, eps_h, 0.5 * (budget - eps_pa))


def _ec_for(ec: EcModel, eps_ec: float) -> EcModel:
    return EcModel(ec.mode, ec.xi, eps_ec, 0.5 * eps_ec)


# --- per-theorem evaluation at fixed ledger and gamma --------------------

class _Problem:
    def __init__(self, n, model, targets, theorem, lin_p, lin_0, ec, beta_offset):
        if theorem not in THEOREMS:
            raise ValueError(f"unknown theorem {theorem!r}; choose from {THEOREMS}")
        self.n = int(n)
        self.model = model
        self.targets = tuple(float(t) for t in targets)
        self.theorem = theorem
        self.lin_p = lin_p
        self.lin_0 = lin_0
        self.ec = ec
        self.beta_offset = beta_offset
        self.w = model.w_exp

    def coords0(self):
        eps_sou, eps_com = self.targets
        if self.theorem in ("general", "preshared"):
            return (eps_sou * 1e-2, eps_sou * 1e-1, eps_sou * 1e-2, eps_sou * 1e-2, eps_com / 2.0)
        return (eps_sou * 1e-2, eps_sou * 1e-1, eps_com / 2.0)

    def ledger(self, c):
        if self.theorem in ("general", "preshared"):
            return _eat_ledger(self.targets, c)
        return _aep_ledger(self.targets, c, 2.0 if self.theorem == "collective" else 1.0)

    def coord_upper(self, i, c):
        """Largest admissible value for coordinate ``i`` given the others."""
        eps_sou, eps_com = self.targets
        if self.theorem in ("general", "preshared"):
            names = ("h", "pa", "s1", "s2", "ec")
            name = names[i]
            if name == "h":
                return eps_sou / 2.0
            if name == "pa":
                return eps_sou - 2.0 * c[0]
            eps_s = 0.5 * (eps_sou - 2.0 * c[0] - c[1])
            if name == "s1":
                return eps_s - 2.0 * c[3]
            if name == "s2":
                return 0.5 * (eps_s - c[2])
            return eps_com
        names = ("h", "pa", "ec")
        weight = 2.0 if self.theorem == "collective" else 1.0
        if names[i] == "h":
            return eps_sou / weight
        if names[i] == "pa":
            return eps_sou - weight * c[0]
        return eps_com

    def evaluate(self, led: EpsilonLedger, gamma: float):
        """Best ``(raw bits, inputs, aux)`` at this ledger and ``gamma``."""
        n, w, model = self.n, self.w, self.model
        th = self.theorem
        ec = _ec_for(self.ec, led.eps_ec_com)
        mg = model.with_gamma(gamma)
        if th == "optcoll":
            m = n_test_rounds(n, gamma)
            if m < 1 or m >= n:
                return -math.inf, None, {}
            delta = _delta_optcoll(m, w, led.eps_pe_com)
            if not delta < w:
                return -math.inf, None, {}
            budget = led.eps_ea
            d_iid = min_delta_for(budget, lambda d: eps_iid_optcoll(m, w, delta, d), 0.0, w - delta, 1e-10)
            if not d_iid < w - delta:
                return -math.inf, None, {}
            ecm = ec_max(mg, ec, n - m, h_hon_generation_only(mg))
            inp = FiniteSizeInputs(n, gamma, model.p, delta, ecm, replace(led, eps_ea=budget), delta_iid=d_iid)
            bits, e_iid, e_pe = key_length_optcoll_raw(inp, lin_in_w(self.lin_p), w)
            return bits, inp, dict(eps_iid=e_iid, eps_pe=e_pe)

        delta = _delta_general(n, gamma, w, led.eps_pe_com)
        if not delta < w:
            return -math.inf, None, {}
        if th == "collective":
            g = make_g(self.lin_p, self.lin_0, gamma)
            budget = led.eps_ea
            d_iid = min_delta_for(budget, lambda d: eps_iid_collective(n, gamma, w, delta, d),
                                  0.0, w - delta, 1e-10)
            if not d_iid < w - delta:
                return -math.inf, None, {}
            ecm = ec_max(mg, ec, n, h_hon(mg))
            inp = FiniteSizeInputs(n, gamma, model.p, delta, ecm, led, delta_iid=d_iid)
            bits, e_iid = key_length_collective_raw(inp, g, w)
            return bits, inp, dict(eps_iid=e_iid)

        if th == "general":
            g = make_g(self.lin_p, self.lin_0, gamma)
            dim = DIM_GENERAL
            ecm = ec_max(mg, ec, n, h_hon(mg))
            tradeoff = g
        else:
            g = make_g_tilde(self.lin_p, self.lin_0, gamma)
            dim = DIM_PRESHARED
            ecm = ec_max(mg, ec, n, h_hon_preshared(mg))
            tradeoff = g.shift(1.0)
        beta = max(tradeoff(0.0), tradeoff(1.0)) - self.beta_offset
        stats = tradeoff_stats(tradeoff, gamma, beta)
        v = v_and_k(stats, 1.5, dim)[0]
        l_ea = math.log2(1.0 / led.eps_ea)
        alpha = _best_alpha(n, v, stats, dim, eta(led.eps_s1) + l_ea)
        alpha_p = best_alpha_prime(n, eta(led.eps_s2) + l_ea)
        inp = FiniteSizeInputs(n, gamma, model.p, delta, ecm, led, alpha, alpha_p, beta)
        raw = key_length_general_raw(inp, g, w) if th == "general" else key_length_preshared_raw(inp, g, w)
        return raw, inp, {}


def _best_gamma(prob: _Problem, led: EpsilonLedger, fixed: Optional[float] = None):
    if fixed is not None:
        return prob.evaluate(led, fixed)
    lo = max(GAMMA_LOG10_MIN, math.log10(2.0 / prob.n))
    hi = math.log10(0.5)
    if lo >= hi:
        return -math.inf, None, {}
    memo = {}

    def neg(lg):
        if lg not in memo:
            memo[lg] = prob.evaluate(led, 10.0 ** lg)
        return -memo[lg][0]

    # coarse scan picks the basin, golden section refines it
    grid = np.linspace(lo, hi, 13)
    vals = [neg(x) for x in grid]
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    golden_section(neg, a, b, GAMMA_LOG10_TOL)
    return max(memo.values(), key=lambda r: r[0])


def _grid(upper: float, per_decade: int):
    if upper <= 10.0 ** EPS_FLOOR_LOG10:
        return []
    top = math.log10(upper)
    k = max(2, int(math.ceil((top - EPS_FLOOR_LOG10) * per_decade)) + 1)
    # stay strictly inside the admissible region
    return list(10.0 ** np.linspace(EPS_FLOOR_LOG10, top, k)[:-1]) + [upper * 0.999]


def optimize_params(n: int, model: HonestDeviceModel, targets=(1e-6, 1e-2), theorem: str = "general", *,
                    lin_p: Optional[AffineEntropyBound] = None, lin_0: Optional[AffineEntropyBound] = None,
                    ec: Optional[EcModel] = None, passes: int = 2, per_decade: int = 1,
                    beta_offset: float = BETA_OFFSET, start=None,
                    gamma: Optional[float] = None) -> OptResult:
    """Maximise the key length of ``theorem`` over its free parameters.

    ``targets = (eps_sou, eps_com)``. ``lin_p`` and ``lin_0`` default to the
    built-in bounds at ``model.p`` and ``p = 0``. ``start`` warm-starts the
    ledger coordinates (as returned in ``diagnostics['coords']``). A given
    ``gamma`` is held fixed instead of optimised. The search is deterministic.
    """
    eps_sou, eps_com = targets
    if not (0.0 < eps_sou < 1.0 and 0.0 < eps_com < 1.0):
        raise ValueError("targets must lie in (0, 1)")
    if gamma is not None and not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma={gamma} outside (0, 1)")
    lin_p = paper_bound(model.p) if lin_p is None else lin_p
    lin_0 = paper_bound(0.0) if lin_0 is None else lin_0
    ec = EcModel() if ec is None else ec
    prob = _Problem(n, model, targets, theorem, lin_p, lin_0, ec, beta_offset)

    cache = {}

    def score(c):
        c = tuple(float(x) for x in c)
        if c not in cache:
            led = prob.ledger(c)
            cache[c] = (-math.inf, None, {}) if led is None else _best_gamma(prob, led, gamma)
        return cache[c]

    coords = list(start) if start is not None else list(prob.coords0())
    best = score(coords)
    for _ in range(passes):
        for i in range(len(coords)):
            for x in _grid(prob.coord_upper(i, coords), per_decade):
                trial = coords.copy()
                trial[i] = x
                res = score(trial)
                if res[0] > best[0]:
                    best, coords = res, trial
    raw, inp, aux = best
    diag = dict(coords=tuple(coords), evaluations=len(cache), **aux)
    if inp is None:
        return OptResult(0, None, theorem, raw, diagnostics=dict(diag, reason="no admissible parameters"))
    led = inp.eps
    if theorem in ("general", "preshared"):
        sound = led.soundness_general()
        comp = led.eps_com
    elif theorem == "collective":
        sound = led.soundness_collective(aux["eps_iid"])
        comp = led.eps_com
    else:
        sound = led.soundness_optcoll(aux["eps_iid"])
        comp = led.eps_ec_com + aux["eps_pe"]
    bits = max(0, math.floor(raw))
    return OptResult(bits, inp, theorem, raw, sound, comp, diag)


def min_positive_n(model: HonestDeviceModel, targets=(1e-6, 1e-2), theorem: str = "general", *,
                   log10_lo: float = 5.0, log10_hi: float = 13.0, resolution: float = 0.02, **kw):
    """Smallest ``log10 n`` (to ``resolution``) at which the optimised key length is positive.

    Scans whole decades, then bisects in ``log10 n``. Returns ``(log10_n, OptResult)``
    or ``(inf, None)`` if no key is found up to ``10**log10_hi``.
    """
    def run(x, start=None):
        return optimize_params(int(round(10.0 ** x)), model, targets, theorem, start=start, **kw)

    prev = log10_lo
    hit = None
    x = log10_lo
    while x <= log10_hi + 1e-9:
        res = run(x)
        if res.bits > 0:
            hit = (x, res)
            break
        prev = x
        x += 1.0
    if hit is None:
        return math.inf, None
    lo, hi = prev, hit[0]
    best = hit[1]
    if lo == hi:
        return hi, best
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        res = run(mid, start=best.diagnostics["coords"])
        if res.bits > 0:
            hi, best = mid, res
        else:
            lo = mid
    return hi, best


# --- large-n scaling -------------------------------------------------------

def scaling_inputs(n: int, model: HonestDeviceModel, lin_p: AffineEntropyBound, lin_0: AffineEntropyBound,
                   ledger: EpsilonLedger, c_delta: float = 1.0, ec: Optional[EcModel] = None,
                   beta_offset: float = BETA_OFFSET) -> FiniteSizeInputs:
    """General-attack inputs with ``delta_tol = c n^(-1/3)`` and
    ``gamma = 3 w n^(-1) delta_tol^(-2) log(2/eps_pe)``.

    The Chernoff bounds then keep the parameter-estimation failure below
    ``eps_pe``. ``alpha`` and ``alpha'`` take their optimising values.
    """
    w = model.w_exp
    delta = c_delta * n ** (-1.0 / 3.0)
    gamma = 3.0 * w / (n * delta ** 2) * math.log2(2.0 / ledger.eps_pe_com)
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"scaling gives gamma={gamma} outside (0, 1)")
    ec = EcModel() if ec is None else ec
    mg = model.with_gamma(gamma)
    ecm = ec_max(mg, _ec_for(ec, ledger.eps_ec_com), n, h_hon(mg))
    g = make_g(lin_p, lin_0, gamma)
    beta = g(1.0) - beta_offset
    stats = tradeoff_stats(g, gamma, beta)
    v = v_and_k(stats, 1.5)[0]
    l_ea = math.log2(1.0 / ledger.eps_ea)
    alpha = _best_alpha(n, v, stats, DIM_GENERAL, eta(ledger.eps_s1) + l_ea)
    alpha_p = best_alpha_prime(n, eta(ledger.eps_s2) + l_ea)
    return FiniteSizeInputs(n, gamma, model.p, delta, ecm, ledger, alpha, alpha_p, beta)


def default_ledger(eps_sou: float = 1e-6, eps_com: float = 1e-2) -> EpsilonLedger:
    """A simple admissible split, used by the scaling check."""
    eps_h = eps_sou / 4.0
    eps_ea = eps_sou - 2.0 * eps_h
    eps_pa = eps_ea / 2.0
    eps_s = (eps_ea - eps_pa) / 2.0
    return EpsilonLedger(eps_com / 2.0, eps_com / 2.0, eps_ea, eps_pa, eps_h, eps_s, eps_s / 4.0, eps_s / 4.0)
