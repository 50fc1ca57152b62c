"""Weighted conditional-entropy objective for the CHSH scenario.

For Alice's key measurement ``x`` the entropy of the preprocessed outcome
given Eve is the relative entropy between ``G(rho)`` (rho with the noisy
preprocessing ancilla attached) and its pinching ``Z_x(G(rho))``. Because the
pinching is block diagonal and ``G`` appends a pure ancilla, this equals
``S(Z_x(G(rho))) - S(rho)``, and each pinched block is a 4x4 compression
``K rho K^T`` of rho. :class:`Evaluator` exploits that; :func:`eval_fobj_alt`
and :func:`eval_fobj_dense` build the 8x8 operators explicitly and serve as
independent references.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import linalg
from .state import (
    BELL_BASIS,
    StructuredState,
    block_eigenvalues,
    blocks_to_bell,
    cost_blocks,
)

I2 = np.eye(2)
X = np.array([[0.0, 1.0], [1.0, 0.0]])
Y = np.array([[0.0, -1j], [1j, 0.0]])
Z = np.array([[1.0, 0.0], [0.0, -1.0]])
KET0 = np.array([1.0, 0.0])
KET1 = np.array([0.0, 1.0])

HS_CONST = 2.012  # continuity-bound constant for the entropy term


@dataclass(frozen=True)
class LagrangeVector:
    """Multipliers for the correlators ``<A_x (x) B_y>``."""

    l00: float
    l01: float
    l10: float
    l11: float
    chsh_restricted: bool = False

    def __post_init__(self):
        if self.chsh_restricted:
            lam = self.l00
            if (self.l01, self.l10, self.l11) != (lam, lam, -lam):
                raise ValueError("CHSH-restricted multipliers must be (l, l, l, -l)")

    @classmethod
    def chsh(cls, lam: float) -> "LagrangeVector":
        lam = float(lam)
        return cls(lam, lam, lam, -lam, chsh_restricted=True)

    def as_array(self) -> np.ndarray:
        return np.array([[self.l00, self.l01], [self.l10, self.l11]], dtype=float)


@dataclass(frozen=True)
class ObjectiveSpec:
    lagrange: LagrangeVector
    weights: tuple = (0.5, 0.5)
    p: float = 0.0

    def __post_init__(self):
        w0, w1 = self.weights
        if w0 < 0 or w1 < 0 or w0 + w1 > 1 + 1e-12:
            raise ValueError(f"invalid key-measurement weights {self.weights}")
        if not 0.0 <= self.p <= 0.5:
            raise ValueError(f"preprocessing bias must lie in [0, 1/2], got {self.p}")

    @classmethod
    def chsh(cls, lam: float, p: float = 0.0, weights=(0.5, 0.5)) -> "ObjectiveSpec":
        return cls(LagrangeVector.chsh(lam), tuple(weights), p)


def pauli_obs(theta: float) -> np.ndarray:
    """``cos(theta) Z + sin(theta) X``."""
    return math.cos(theta) * Z + math.sin(theta) * X


def _eigenbasis(theta: float) -> np.ndarray:
    """Columns: +1 and -1 eigenvectors of ``pauli_obs(theta)``."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]])


def projectors(theta: float):
    obs = pauli_obs(theta)
    return [0.5 * (I2 + obs), 0.5 * (I2 - obs)]


def noisy_projectors(theta: float, p: float):
    """Projectors ``Pi~_a = Pi_a (x) |0><0| + Pi_{a+1} (x) |1><1|`` on A (x) T.

    The ancilla T is prepared in ``sqrt(1-p)|0> + sqrt(p)|1>`` (see
    :func:`ancilla`); the projectors themselves do not depend on ``p``,
    which is validated for interface symmetry only.
    """
    if not 0.0 <= p <= 0.5:
        raise ValueError(f"p must lie in [0, 1/2], got {p}")
    pi = projectors(theta)
    p0 = np.outer(KET0, KET0)
    p1 = np.outer(KET1, KET1)
    return [np.kron(pi[a], p0) + np.kron(pi[1 - a], p1) for a in (0, 1)]


def ancilla(p: float) -> np.ndarray:
    return np.array([math.sqrt(1.0 - p), math.sqrt(p)])


def bob_obs(r) -> np.ndarray:
    rz, rx = r
    return rz * Z + rx * X


def correlator_operator(lagrange: LagrangeVector, theta_a: float, r) -> np.ndarray:
    """``sum_xy lambda_xy A_x (x) B_y`` with ``A_0 = B_0 = Z``."""
    lam = lagrange.as_array()
    a_ops = (Z, pauli_obs(theta_a))
    b_ops = (Z, bob_obs(r))
    out = np.zeros((4, 4))
    for x in (0, 1):
        for y in (0, 1):
            if lam[x, y] != 0.0:
                out += lam[x, y] * np.kron(a_ops[x], b_ops[y])
    return out


def _entropy(w: np.ndarray) -> float:
    w = w[w > 0.0]
    return float(-np.sum(w * np.log2(w)))


class Evaluator:
    """Objective and gradient for fixed ``(spec, theta_a, r)`` on block arrays.

    States are ``(2, 2, 2)`` block arrays in the Bell basis (see
    :mod:`.state`). Gradients are returned in the same block form, so the
    pairing with a direction ``d`` is ``np.sum(grad * d)``.
    """

    def __init__(self, spec: ObjectiveSpec, theta_a: float, r):
        self.spec = spec
        self.theta_a = float(theta_a)
        self.r = (float(r[0]), float(r[1]))
        self.weights = np.array(spec.weights, dtype=float)
        self.wsum = float(self.weights.sum())
        p = spec.p
        m0 = np.sqrt(np.array([1 - p, 1 - p, p, p]))
        m1 = m0[::-1]
        ks = []
        kw = []
        for x, theta in enumerate((0.0, self.theta_a)):
            if self.weights[x] == 0.0:
                continue
            rot = np.kron(_eigenbasis(theta), I2).T @ BELL_BASIS
            for m in (m0, m1):
                keep = m > 0.0
                ks.append((m[:, None] * rot)[keep])
                kw.append(self.weights[x])
        self.k = np.array(ks) if ks else np.zeros((0, 4, 4))
        self.kw = np.array(kw)
        self.lin = cost_blocks(correlator_operator(spec.lagrange, self.theta_a, self.r))

    # --- values -------------------------------------------------------
    def pinched(self, blocks: np.ndarray) -> np.ndarray:
        m = blocks_to_bell(blocks)
        return self.k @ m @ np.swapaxes(self.k, 1, 2)

    def entropy_term(self, blocks: np.ndarray) -> float:
        if self.kw.size == 0:
            return 0.0
        wb = np.linalg.eigvalsh(self.pinched(blocks))
        total = 0.0
        for weight, w in zip(self.kw, wb):
            total += weight * _entropy(w)
        return total - self.wsum * _entropy(block_eigenvalues(blocks).ravel())

    def value(self, blocks: np.ndarray) -> float:
        return self.entropy_term(blocks) - float(np.sum(self.lin * blocks))

    def values(self, stack: np.ndarray) -> np.ndarray:
        """Objective on a stack ``(m, 2, 2, 2)`` of block arrays."""
        out = -np.einsum("kij,mkij->m", self.lin, stack)
        if self.kw.size == 0:
            return out
        mats = np.zeros((stack.shape[0], 4, 4))
        mats[:, :2, :2] = stack[:, 0]
        mats[:, 2:, 2:] = stack[:, 1]
        pinched = np.einsum("aij,mjk,alk->mail", self.k, mats, self.k)
        wb = np.linalg.eigvalsh(pinched)
        wr = block_eigenvalues(stack).reshape(stack.shape[0], -1)
        ent_b = -np.sum(np.where(wb > 0, wb * np.log2(np.where(wb > 0, wb, 1.0)), 0.0), axis=-1)
        ent_r = -np.sum(np.where(wr > 0, wr * np.log2(np.where(wr > 0, wr, 1.0)), 0.0), axis=-1)
        return out + ent_b @ self.kw - self.wsum * ent_r

    # --- gradient -----------------------------------------------------
    def gradient(self, blocks: np.ndarray) -> np.ndarray:
        """Gradient in block form; requires every block to be positive definite."""
        grad = -self.lin.copy()
        if self.kw.size == 0:
            return grad
        w, v = np.linalg.eigh(blocks)
        if w.min() <= 0.0:
            raise ValueError("gradient needs a full-rank state; perturb first")
        logm = np.einsum("kij,kj,klj->kil", v, np.log2(w), v)
        grad += self.wsum * logm
        wb, vb = np.linalg.eigh(self.pinched(blocks))
        if wb.min() <= 0.0:
            raise ValueError("pinched state is singular; perturb first")
        logb = np.einsum("aij,aj,alj->ail", vb, np.log2(wb), vb)
        full = np.einsum("a,aji,ajk,akl->il", self.kw, self.k, logb, self.k)
        grad[0] -= full[:2, :2]
        grad[1] -= full[2:, 2:]
        return grad

    def value_and_gradient(self, blocks: np.ndarray):
        return self.value(blocks), self.gradient(blocks)


# --- public wrappers on StructuredState ---------------------------------

def eval_fobj(spec: ObjectiveSpec, theta_a: float, r, state: StructuredState) -> float:
    """``sum_x w_x D(G(rho) || Z_x(G(rho))) - lambda . <Gamma>_rho`` in bits."""
    return Evaluator(spec, theta_a, r).value(state.blocks())


def grad_state(spec: ObjectiveSpec, theta_a: float, r, state: StructuredState) -> np.ndarray:
    """Gradient of :func:`eval_fobj` as a 4x4 operator in the computational basis.

    Only the structured (block) part is kept, so
    ``tr(grad @ sigma.matrix())`` is the directional derivative towards any
    structured ``sigma``.
    """
    g = Evaluator(spec, theta_a, r).gradient(state.blocks())
    return BELL_BASIS @ blocks_to_bell(g) @ BELL_BASIS.T


def continuity_penalty(delta: float, spec: ObjectiveSpec) -> float:
    """Worst-case change of the objective when Alice's angle moves by ``delta``."""
    if not 0.0 <= delta <= math.pi:
        raise ValueError(f"delta must lie in [0, pi], got {delta}")
    lam = spec.lagrange
    return (HS_CONST * spec.weights[1] * delta
            + (abs(lam.l10) + abs(lam.l11)) * math.sqrt(max(0.0, 2.0 - 2.0 * math.cos(delta))))


# --- dense reference constructions -------------------------------------

def _apply_g(rho: np.ndarray, p: float) -> np.ndarray:
    phi = ancilla(p)
    return np.kron(rho, np.outer(phi, phi))


def _density(state) -> np.ndarray:
    if isinstance(state, StructuredState):
        return state.matrix()
    rho = np.asarray(state, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a StructuredState or a 4x4 density matrix, got shape {rho.shape}")
    return rho


def _correlator_value(spec, theta_a, r, rho) -> float:
    return float(np.trace(correlator_operator(spec.lagrange, theta_a, r) @ rho).real)


def eval_fobj_dense(spec: ObjectiveSpec, theta_a: float, r, state) -> float:
    """Same objective built from 8x8 operators on A (x) B (x) T.

    ``state`` is a :class:`StructuredState` or any 4x4 density matrix. The
    noisy projectors act on A (x) T, so they are reordered onto the A, B, T
    tensor layout before pinching.
    """
    rho = _density(state)
    g = _apply_g(rho, spec.p)
    total = 0.0
    for x, theta in enumerate((0.0, theta_a)):
        if spec.weights[x] == 0.0:
            continue
        pinched = np.zeros((8, 8), dtype=complex)
        for proj in noisy_projectors(theta, spec.p):
            # proj on (A, T) -> operator on (A, B, T)
            p4 = proj.reshape(2, 2, 2, 2)  # a, t, a', t'
            full = np.einsum("atcu,bd->abtcdu", p4, I2).reshape(8, 8)
            pinched += full @ g @ full
        total += spec.weights[x] * linalg.rel_entropy(g, pinched)
    return total - _correlator_value(spec, theta_a, r, rho)


def eval_fobj_alt(spec: ObjectiveSpec, theta_a: float, r, state) -> float:
    """Objective via the flip isometry ``V|psi> = sqrt(1-p)|psi>|0> + sqrt(p) Y|psi>|1>``.

    Alice's output is pinched directly with ``Pi_a (x) 1_BT``; conjugating
    by ``Y`` flips both Z and X outcomes, which is the same preprocessing.
    ``state`` is a :class:`StructuredState` or any 4x4 density matrix.
    """
    rho = _density(state)
    p = spec.p
    y_a = np.kron(Y, I2)
    # V: C^4 -> C^8 with T as the last factor
    v = math.sqrt(1.0 - p) * np.kron(np.eye(4), KET0[:, None]) + math.sqrt(p) * np.kron(y_a, KET1[:, None])
    g = v @ rho @ v.conj().T
    total = 0.0
    for x, theta in enumerate((0.0, theta_a)):
        if spec.weights[x] == 0.0:
            continue
        pinched = np.zeros((8, 8), dtype=complex)
        for proj in projectors(theta):
            full = np.kron(proj, np.eye(4))
            pinched += full @ g @ full
        total += spec.weights[x] * linalg.rel_entropy(g, pinched)
    return total - _correlator_value(spec, theta_a, r, rho)
