"""Small dense Hermitian linear algebra and entropy primitives.

Everything here works on plain ``numpy`` arrays of dimension 2, 4 or 8.
Entropies are in bits.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

HERMITIAN_TOL = 1e-12
SUPPORT_CUTOFF = 1e-14
SUPPORT_WEIGHT_TOL = 1e-9
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100
SUPPORTED_DIMS = (2, 4, 8)


class InfiniteDivergence(ValueError):
    """Raised when rho has weight outside the support of sigma."""


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate ``m`` as a square Hermitian matrix of a supported dimension.

    Returns a complex copy with the anti-Hermitian residue removed.
    """
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] not in SUPPORTED_DIMS:
        raise ValueError(f"unsupported dimension {a.shape[0]}")
    dev = np.max(np.abs(a - a.conj().T))
    if dev > tol:
        raise ValueError(f"matrix is not Hermitian (max deviation {dev:.3g})")
    return 0.5 * (a + a.conj().T)


def eigh(m) -> EigenDecomposition:
    """Cyclic Jacobi eigendecomposition of a Hermitian matrix.

    Sweeps over all (p, q) pairs until the off-diagonal Frobenius norm drops
    below ``JACOBI_TOL`` (scaled by ``max(1, ||m||_F)``) or
    ``JACOBI_MAX_SWEEPS`` sweeps have run.

    Parameters
    ----------
    m : array_like
        Hermitian matrix of dimension 2, 4 or 8.

    Returns
    -------
    EigenDecomposition
        Ascending eigenvalues and the unitary matrix of column eigenvectors.
    """
    a = as_hermitian(m)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    thresh = JACOBI_TOL * max(1.0, np.linalg.norm(a))
    offdiag = ~np.eye(n, dtype=bool)

    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.linalg.norm(a[offdiag])
        if off < thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                # Phase the pair to a real symmetric 2x2, then rotate.
                phase = apq / mag
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # u acts on columns p, q: u = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                u00, u01 = c, s
                u10, u11 = -s * np.conj(phase), c * np.conj(phase)
                colp = a[:, p].copy()
                colq = a[:, q].copy()
                a[:, p] = colp * u00 + colq * u10
                a[:, q] = colp * u01 + colq * u11
                rowp = a[p, :].copy()
                rowq = a[q, :].copy()
                a[p, :] = np.conj(u00) * rowp + np.conj(u10) * rowq
                a[q, :] = np.conj(u01) * rowp + np.conj(u11) * rowq
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = vp * u00 + vq * u10
                v[:, q] = vp * u01 + vq * u11

    w = np.real(np.diag(a))
    order = np.argsort(w)
    return EigenDecomposition(w[order], v[:, order])


def _check_state(rho: np.ndarray, name: str) -> None:
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-10:
        raise ValueError(f"{name} must have unit trace (got {tr:.12g})")


def rel_entropy(rho, sigma) -> float:
    """Quantum relative entropy ``D(rho || sigma)`` in bits.

    Eigenvalues of ``sigma`` below ``SUPPORT_CUTOFF`` count as its null
    space. Raises :class:`InfiniteDivergence` when ``rho`` puts more than
    ``SUPPORT_WEIGHT_TOL`` weight there.
    """
    r = as_hermitian(rho)
    s = as_hermitian(sigma)
    if r.shape != s.shape:
        raise ValueError("rho and sigma must have the same dimension")
    _check_state(r, "rho")

    wr, vr = eigh(r)
    if wr[0] < -1e-10:
        raise ValueError(f"rho is not PSD (min eigenvalue {wr[0]:.3g})")
    ws, vs = eigh(s)

    keep_r = wr > SUPPORT_CUTOFF
    pr = wr[keep_r]
    neg_entropy = float(np.sum(pr * np.log2(pr)))

    # overlap[i, j] = |<r_i|s_j>|^2, weighted by rho's spectrum
    overlap = np.abs(vr.conj().T @ vs) ** 2
    weights = wr.clip(min=0.0) @ overlap
    null = ws <= SUPPORT_CUTOFF
    if np.sum(weights[null]) > SUPPORT_WEIGHT_TOL:
        raise InfiniteDivergence("rho has weight outside the support of sigma")
    cross = float(np.sum(weights[~null] * np.log2(ws[~null])))
    return neg_entropy - cross


def binary_entropy(x: float) -> float:
    """Binary entropy ``h(x)`` in bits."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"probability out of range: {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def kron(a, b) -> np.ndarray:
    """Tensor product restricted to the dimensions used in this package."""
    a = np.asarray(a)
    b = np.asarray(b)
    out = np.kron(a, b)
    if out.shape[0] not in (4, 8):
        raise ValueError(f"unsupported product dimension {out.shape[0]}")
    return out


def von_neumann_entropy(rho) -> float:
    """Entropy ``-tr rho log2 rho`` of a density matrix."""
    w = eigh(rho).eigenvalues
    w = w[w > SUPPORT_CUTOFF]
    return float(-np.sum(w * np.log2(w)))
