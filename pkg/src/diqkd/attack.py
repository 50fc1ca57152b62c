"""Upper bound on noise tolerance from a convex-mixture attack.

Eve mixes the ideal CHSH strategy with a deterministic local strategy so
that the mixture reproduces the depolarized CHSH value. The local branch
leaves her with full knowledge of Alice's raw output, so only the
preprocessing flip hides it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from ._search import bisect_root
from .linalg import binary_entropy

Q2 = (2.0 - math.sqrt(2.0)) / 4.0
# Quoted for context only; nothing here depends on them.
Q3_APPROX = 0.159
Q_POVM_APPROX = 0.273


@dataclass(frozen=True)
class AttackEvaluation:
    q: float
    p: float
    p_bell: float
    h_eve: float
    h_bob: float
    lhv_only: bool = False

    @property
    def margin(self) -> float:
        return self.h_eve - self.h_bob


def attack_entropies(q: float, p: float) -> AttackEvaluation:
    if not 0.0 <= p <= 0.5:
        raise ValueError(f"p={p} outside [0, 1/2]")
    if q < 0.0:
        raise ValueError(f"q={q} must be nonnegative")
    p_bell = (Q2 - q) / Q2
    lhv_only = p_bell < 0.0
    p_bell = min(1.0, max(0.0, p_bell))
    h_eve = p_bell + (1.0 - p_bell) * binary_entropy(p)
    h_bob = binary_entropy(min(1.0, p + (1.0 - 2.0 * p) * q))
    return AttackEvaluation(q, p, p_bell, h_eve, h_bob, lhv_only)


def q_att(p: float, tol: float = 1e-10) -> float:
    """Largest depolarizing noise at which the attack still leaves key."""
    if not 0.0 <= p < 0.5:
        raise ValueError(f"p={p} outside [0, 1/2)")

    def margin(q):
        return attack_entropies(q, p).margin

    # sign audit before bisecting: positive at q=0, negative at q2
    lo, hi = 0.0, Q2
    if not (margin(lo) > 0.0 and margin(hi) < 0.0):
        raise ArithmeticError(f"attack margin has no sign change on [0, q2] for p={p}")
    return bisect_root(margin, lo, hi, tol)


def q_att_limit() -> float:
    """Limit of :func:`q_att` as ``p -> 1/2``."""
    return (1.0 + 4.0 * Q2 - math.sqrt(8.0 * Q2 + 1.0)) / (8.0 * Q2)


def q_att_limit_alt() -> float:
    """Equivalent closed form ``1 - (sqrt(7 + 4 sqrt2) - 1) / (2 sqrt2)``."""
    return 1.0 - (math.sqrt(7.0 + 4.0 * math.sqrt(2.0)) - 1.0) / (2.0 * math.sqrt(2.0))
