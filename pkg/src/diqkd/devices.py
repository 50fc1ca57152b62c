"""Honest-device models, error-correction sizing and an IID round simulator."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import binary_entropy

W_TSIRELSON = (2.0 + math.sqrt(2.0)) / 4.0
LOG2_5 = math.log2(5.0)


@dataclass(frozen=True)
class HonestDeviceModel:
    """IID honest devices with symmetric CHSH statistics.

    ``w_exp`` is the CHSH win probability, ``p_err`` the probability that the
    generation-round outputs disagree before preprocessing, ``p`` the
    noisy-preprocessing bias and ``gamma`` the test-round probability.
    """

    w_exp: float
    p_err: float
    p: float = 0.0
    gamma: float = 0.01
    q: Optional[float] = None

    def __post_init__(self):
        if not 0.5 - 1e-12 <= self.w_exp <= W_TSIRELSON + 1e-12:
            raise ValueError(f"w_exp={self.w_exp} outside [1/2, (2+sqrt2)/4]")
        for name in ("p_err", "gamma"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} is not a probability")
        if not 0.0 <= self.p <= 0.5:
            raise ValueError(f"p={self.p} outside [0, 1/2]")

    def with_gamma(self, gamma: float) -> "HonestDeviceModel":
        return HonestDeviceModel(self.w_exp, self.p_err, self.p, gamma, self.q)

    @property
    def key_error(self) -> float:
        """Disagreement probability after preprocessing, ``p + (1-2p) p_err``."""
        return self.p + (1.0 - 2.0 * self.p) * self.p_err


@dataclass(frozen=True)
class EcModel:
    mode: str = "optimal"
    xi: float = 1.0
    eps_ec_com: float = 1e-3
    eps0: float = 5e-4

    def __post_init__(self):
        if self.mode not in ("optimal", "practical"):
            raise ValueError(f"unknown error-correction mode {self.mode!r}")
        if self.xi < 1.0:
            raise ValueError("xi must be >= 1")
        if not 0.0 < self.eps0 < self.eps_ec_com:
            raise ValueError("need 0 < eps0 < eps_ec_com")


def depolarizing_model(q: float, p: float = 0.0, gamma: float = 0.01) -> HonestDeviceModel:
    """Werner-state devices: ``w_exp = (1-2q)(2+sqrt2)/4 + q`` and ``p_err = q``."""
    if not 0.0 <= q <= 0.5:
        raise ValueError(f"q={q} outside [0, 1/2]")
    if not 0.0 <= p <= 0.5:
        raise ValueError(f"p={p} outside [0, 1/2]")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma={gamma} outside (0, 1)")
    w = (1.0 - 2.0 * q) * W_TSIRELSON + q
    return HonestDeviceModel(w, q, p, gamma, q)


def h_hon(model: HonestDeviceModel) -> float:
    """``H(A|B X Y)`` per round under sifting: ``(1-g)/2 h(e) + g h(w)``."""
    g = model.gamma
    return 0.5 * (1.0 - g) * binary_entropy(model.key_error) + g * binary_entropy(model.w_exp)


def h_hon_preshared(model: HonestDeviceModel) -> float:
    """As :func:`h_hon` when inputs are pre-shared, so no generation round is sifted away."""
    g = model.gamma
    return (1.0 - g) * binary_entropy(model.key_error) + g * binary_entropy(model.w_exp)


def h_hon_generation_only(model: HonestDeviceModel) -> float:
    return binary_entropy(model.key_error)


def ec_max(model: HonestDeviceModel, ec: EcModel, n: int, h: float) -> int:
    """Error-correction communication budget in bits for ``n`` rounds of entropy ``h``.

    ``model`` is accepted for interface symmetry; only ``h`` enters.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if ec.mode == "practical":
        return math.ceil(ec.xi * n * h)
    if ec.eps0 >= ec.eps_ec_com:
        raise ValueError("eps0 must be smaller than eps_ec_com")
    corr = math.sqrt(n) * 2.0 * LOG2_5 * math.sqrt(math.log2(2.0 / ec.eps0 ** 2))
    return math.ceil(n * h + corr + 2.0 * math.log2(1.0 / (ec.eps_ec_com - ec.eps0)) + 4.0)


# --- simulation ----------------------------------------------------------

def make_rng(seed: int) -> np.random.Generator:
    """Philox (counter-based, 64-bit keyed) generator; streams split via ``SeedSequence``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def spawn_rngs(seed: int, k: int) -> list:
    return [np.random.Generator(np.random.Philox(s)) for s in np.random.SeedSequence(seed).spawn(k)]


def simulate_honest_counts(model: HonestDeviceModel, n: int, seed: int):
    """Counts ``(wins, losses, tests)`` for ``n`` IID rounds.

    Each round is a test with probability ``gamma`` and a test is won with
    probability ``w_exp``. The counts are drawn hierarchically
    (``tests ~ Bin(n, gamma)``, ``wins ~ Bin(tests, w_exp)``), which has the
    same law as sampling round by round.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(seed)
    tests = int(rng.binomial(n, model.gamma))
    wins = int(rng.binomial(tests, model.w_exp))
    return wins, tests - wins, tests


def simulate_rounds(model: HonestDeviceModel, n: int, seed: int):
    """Round-by-round version of :func:`simulate_honest_counts` (for small ``n``)."""
    rng = make_rng(seed)
    test = rng.random(n) < model.gamma
    win = rng.random(n) < model.w_exp
    wins = int(np.sum(test & win))
    tests = int(np.sum(test))
    return wins, tests - wins, tests


def simulate_many(model: HonestDeviceModel, n: int, trials: int, seed: int):
    """Arrays of (wins, losses, tests) over ``trials`` independent runs."""
    rng = make_rng(seed)
    tests = rng.binomial(n, model.gamma, size=trials)
    wins = rng.binomial(tests, model.w_exp)
    return wins, tests - wins, tests


def model_from_config(cfg: dict) -> tuple:
    """Build ``(HonestDeviceModel, EcModel)`` from a JSON-style mapping.

    Keys: ``q`` or ``w_exp`` + ``p_err``; ``p``; ``gamma``; ``ec`` with
    ``mode``, ``xi``, ``eps_ec_com``, ``eps0``.
    """
    p = float(cfg.get("p", 0.0))
    gamma = float(cfg.get("gamma", 0.01))
    if "q" in cfg:
        model = depolarizing_model(float(cfg["q"]), p, gamma)
    elif "w_exp" in cfg and "p_err" in cfg:
        model = HonestDeviceModel(float(cfg["w_exp"]), float(cfg["p_err"]), p, gamma)
    else:
        raise ValueError("config needs either 'q' or both 'w_exp' and 'p_err'")
    ec_cfg = cfg.get("ec", {})
    ec = EcModel(ec_cfg.get("mode", "optimal"), float(ec_cfg.get("xi", 1.0)),
                 float(ec_cfg.get("eps_ec_com", 1e-3)), float(ec_cfg.get("eps0", 5e-4)))
    return model, ec
