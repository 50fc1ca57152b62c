"""Frank-Wolfe lower bounds for a fixed measurement configuration."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .._search import golden_section
from .objective import Evaluator, ObjectiveSpec
from .state import StructuredState, block_eigenvalues, linear_min_blocks

PERTURB_FLOOR = 1e-14
NUDGE_MAX = 1e-6
LINE_SEARCH_TOL = 1e-6


@dataclass
class CertifiedValue:
    """A lower bound together with the best feasible value seen.

    ``lower_bound`` is valid whatever the gap; ``converged`` records whether
    the requested tolerance was reached.
    """

    lower_bound: float
    feasible_value: float
    argmin: tuple  # (theta_a, r_z, r_x, StructuredState)
    iterations: int = 0
    converged: bool = False
    certified: bool = True
    history: list = field(default_factory=list, repr=False)

    @property
    def gap(self) -> float:
        return self.feasible_value - self.lower_bound


def perturb(blocks: np.ndarray) -> np.ndarray:
    """Mix in ``delta * I/4`` with ``delta = max(-lambda_min, 1e-14)``.

    If roundoff leaves a non-positive eigenvalue, ``delta`` is doubled until
    the state is positive definite.
    """
    delta = max(-float(block_eigenvalues(blocks).min()), PERTURB_FLOOR)
    eye = np.array([np.eye(2), np.eye(2)])
    while True:
        out = (1.0 - delta) * blocks + delta * eye / 4.0
        if block_eigenvalues(out).min() > 0.0:
            return out
        delta *= 2.0


# --- smooth local descent (heuristic starting points) --------------------

def _params_to_blocks(x: np.ndarray):
    L = x.reshape(2, 2, 2)
    P = L @ np.swapaxes(L, 1, 2)
    t = np.trace(P, axis1=1, axis2=2).sum()
    return P / t, L, t


def blocks_to_params(blocks: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(blocks)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)[:, None, :]).ravel()


def local_min(ev: Evaluator, start: Optional[np.ndarray] = None, maxiter: int = 500):
    """Local minimum of the objective over structured states.

    Uses L-BFGS on a Cholesky-style factorisation ``block_k = L_k L_k^T``
    so every iterate is a valid state. Returns ``(blocks, value)``.
    """
    if start is None:
        start = np.array([np.eye(2), np.eye(2)]) / 4.0
    x0 = blocks_to_params(0.999 * start + 0.001 * np.array([np.eye(2), np.eye(2)]) / 4.0)

    def fun(x):
        b, L, t = _params_to_blocks(x)
        try:
            f, g = ev.value_and_gradient(b)
        except ValueError:
            return ev.value(b), np.zeros_like(x)
        inner = np.sum(g * b)
        dP = (g - inner * np.eye(2)) / t
        dL = 2.0 * dP @ L
        return f, dL.ravel()

    res = minimize(fun, x0, jac=True, method="L-BFGS-B",
                   options=dict(maxiter=maxiter, gtol=1e-10, ftol=1e-15))
    b = _params_to_blocks(res.x)[0]
    return b, ev.value(b)


# --- Frank-Wolfe ---------------------------------------------------------

def _value_and_gradient(ev: Evaluator, rho: np.ndarray):
    """Value and gradient, mixing in more of ``I/4`` while a pinched block is numerically singular.

    Returns the (possibly nudged) state with its value and gradient; the
    Frank-Wolfe bound is valid at any state, so the nudge costs nothing.
    """
    delta = PERTURB_FLOOR
    eye = np.array([np.eye(2), np.eye(2)]) / 4.0
    while True:
        try:
            return (rho,) + tuple(ev.value_and_gradient(rho))
        except ValueError:
            delta *= 10.0
            if delta > NUDGE_MAX:
                raise
            rho = (1.0 - delta) * rho + delta * eye

def frank_wolfe_blocks(ev: Evaluator, start: np.ndarray, eps_tol: float, max_iters: int,
                       stop_above: Optional[float] = None, keep_history: bool = False):
    """Frank-Wolfe on block arrays. Returns a :class:`CertifiedValue` without argmin."""
    rho = start.copy()
    best_lb = -np.inf
    best_f = np.inf
    best_rho = rho
    history = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        rho, f, grad = _value_and_gradient(ev, perturb(rho))
        lmo_val, vertex = linear_min_blocks(grad)
        gap = float(np.sum(grad * rho)) - lmo_val
        lb = f - gap
        if lb > best_lb:
            best_lb = lb
        if f < best_f:
            best_f, best_rho = f, rho
        if keep_history:
            history.append((f, gap, best_lb))
        if gap <= eps_tol:
            converged = True
            break
        if stop_above is not None and best_lb >= stop_above:
            break
        direction = vertex - rho
        mu, _ = golden_section(lambda t: ev.value(rho + t * direction), 0.0, 1.0, LINE_SEARCH_TOL)
        rho = rho + mu * direction
    return CertifiedValue(best_lb, best_f, (best_rho,), it, converged, True, history)


def frank_wolfe(spec: ObjectiveSpec, theta_a: float, r, eps_tol: float = 1e-4,
                max_iters: int = 1000, start: Optional[StructuredState] = None,
                warm_start: bool = True) -> CertifiedValue:
    """Certified lower bound on ``min_rho F(theta_a, r, rho)``.

    The starting state is refined by :func:`local_min` when ``warm_start``
    is set; Frank-Wolfe iterations then close the duality gap. The lower
    bound at every iterate is ``F(rho_k) - gap_k`` and the best one is kept.
    """
    if eps_tol <= 0:
        raise ValueError("eps_tol must be positive")
    ev = Evaluator(spec, theta_a, r)
    b0 = start.blocks() if start is not None else None
    if warm_start:
        b0, _ = local_min(ev, b0)
    elif b0 is None:
        b0 = np.array([np.eye(2), np.eye(2)]) / 4.0
    res = frank_wolfe_blocks(ev, b0, eps_tol, max_iters, keep_history=True)
    rho = StructuredState.from_blocks(res.argmin[0])
    res.argmin = (float(theta_a), float(r[0]), float(r[1]), rho)
    return res
