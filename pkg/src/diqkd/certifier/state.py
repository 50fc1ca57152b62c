"""Two-qubit states that are block diagonal in the Bell basis.

The Bell basis is ordered (Phi+, Psi-, Phi-, Psi+). A structured state has
two real symmetric 2x2 blocks, one on span{Phi+, Psi-} and one on
span{Phi-, Psi+}; every other entry in that basis vanishes.

Internally states are handled as ``(2, 2, 2)`` arrays of blocks, which is
what the optimizers manipulate. :class:`StructuredState` is the public
value type.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_S = 1.0 / np.sqrt(2.0)
#: Columns are Phi+, Psi-, Phi-, Psi+ in the computational basis |00>,|01>,|10>,|11>.
BELL_BASIS = np.array(
    [
        [_S, 0.0, _S, 0.0],
        [0.0, _S, 0.0, _S],
        [0.0, -_S, 0.0, _S],
        [_S, 0.0, -_S, 0.0],
    ]
)

PSD_TOL = 1e-10


@dataclass(frozen=True)
class StructuredState:
    phi_plus: float
    psi_minus: float
    phi_minus: float
    psi_plus: float
    l1: float = 0.0
    l2: float = 0.0

    def __post_init__(self):
        b = self.blocks()
        tr = float(np.trace(b[0]) + np.trace(b[1]))
        if abs(tr - 1.0) > PSD_TOL:
            raise ValueError(f"state trace {tr:.12g} != 1")
        if min(np.linalg.eigvalsh(b).min(), 0.0) < -PSD_TOL:
            raise ValueError("state is not positive semidefinite")

    def blocks(self) -> np.ndarray:
        return np.array(
            [
                [[self.phi_plus, self.l1], [self.l1, self.psi_minus]],
                [[self.phi_minus, self.l2], [self.l2, self.psi_plus]],
            ]
        )

    def bell_matrix(self) -> np.ndarray:
        return blocks_to_bell(self.blocks())

    def matrix(self) -> np.ndarray:
        """Density matrix in the computational basis."""
        return blocks_to_matrix(self.blocks())

    @classmethod
    def from_blocks(cls, blocks) -> "StructuredState":
        b = np.asarray(blocks, dtype=float)
        return cls(b[0, 0, 0], b[0, 1, 1], b[1, 0, 0], b[1, 1, 1],
                   0.5 * (b[0, 0, 1] + b[0, 1, 0]), 0.5 * (b[1, 0, 1] + b[1, 1, 0]))

    @classmethod
    def bell(cls, which: str = "phi_plus") -> "StructuredState":
        vals = dict(phi_plus=0.0, psi_minus=0.0, phi_minus=0.0, psi_plus=0.0)
        vals[which] = 1.0
        return cls(**vals)

    @classmethod
    def maximally_mixed(cls) -> "StructuredState":
        return cls(0.25, 0.25, 0.25, 0.25)


def blocks_to_bell(blocks: np.ndarray) -> np.ndarray:
    m = np.zeros((4, 4))
    m[:2, :2] = blocks[0]
    m[2:, 2:] = blocks[1]
    return m


def blocks_to_matrix(blocks: np.ndarray) -> np.ndarray:
    return BELL_BASIS @ blocks_to_bell(blocks) @ BELL_BASIS.T


def cost_blocks(cost) -> np.ndarray:
    """Project a 4x4 Hermitian cost onto the structured blocks.

    ``tr(cost @ rho) == sum(cost_blocks(cost) * blocks)`` for every
    structured ``rho``.
    """
    c = BELL_BASIS.T @ np.asarray(cost) @ BELL_BASIS
    c = 0.5 * (c + c.conj().T).real
    return np.array([c[:2, :2], c[2:, 2:]])


def block_eigh_min(blocks: np.ndarray):
    """Smallest eigenpair of each real symmetric 2x2 block, in closed form."""
    a = blocks[..., 0, 0]
    d = blocks[..., 1, 1]
    b = 0.5 * (blocks[..., 0, 1] + blocks[..., 1, 0])
    mean = 0.5 * (a + d)
    rad = np.hypot(0.5 * (a - d), b)
    lam = mean - rad
    # eigenvector of the lower eigenvalue: angle phi with tan(2 phi) = 2b/(a-d)
    phi = 0.5 * np.arctan2(2.0 * b, a - d)
    vec = np.stack([-np.sin(phi), np.cos(phi)], axis=-1)
    return lam, vec


def linear_min_blocks(cblocks: np.ndarray):
    """Minimise ``sum(cblocks * blocks)`` over structured states.

    Returns ``(value, blocks)`` where ``blocks`` is the rank-1 optimiser.
    """
    lam, vec = block_eigh_min(cblocks)
    k = int(np.argmin(lam))
    out = np.zeros((2, 2, 2))
    out[k] = np.outer(vec[k], vec[k])
    return float(lam[k]), out


def linear_min_structured(cost):
    """Exact minimum of ``tr(cost rho)`` over structured states.

    The feasible set is the convex hull of rank-1 projectors inside either
    block, so the minimum is the smallest eigenvalue of the two symmetrized
    cost blocks.

    Returns
    -------
    (StructuredState, float)
    """
    value, blocks = linear_min_blocks(cost_blocks(cost))
    return StructuredState.from_blocks(blocks), value


def block_eigenvalues(blocks: np.ndarray) -> np.ndarray:
    a = blocks[..., 0, 0]
    d = blocks[..., 1, 1]
    b = blocks[..., 0, 1]
    mean = 0.5 * (a + d)
    rad = np.hypot(0.5 * (a - d), b)
    return np.stack([mean - rad, mean + rad], axis=-1)


def project_blocks(blocks: np.ndarray) -> np.ndarray:
    """Nearest structured state: clip block eigenvalues at 0 and renormalise."""
    b = 0.5 * (blocks + np.swapaxes(blocks, -1, -2))
    w, v = np.linalg.eigh(b)
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total <= 0.0:
        return np.array([np.eye(2), np.eye(2)]) / 4.0
    out = np.einsum("kij,kj,klj->kil", v, w / total, v)
    return out


def random_blocks(rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random structured state, full rank unless ``rank`` is given."""
    g = rng.normal(size=(2, 2, 2 if rank is None else 1))
    b = g @ np.swapaxes(g, -1, -2)
    if rank is not None and rank < 2:
        b[1] = 0.0
    return b / (np.trace(b[0]) + np.trace(b[1]))
