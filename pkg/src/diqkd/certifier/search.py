"""Global search over measurement angles.

``heuristic_min`` gives feasible (upper) values for ``c_lambda``;
``certify_c_lambda`` gives a certified lower bound by branch-and-bound over
Alice's second angle and a polygonal cover of Bob's Bloch semicircle.
"""
from __future__ import annotations

import heapq
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import minimize

from .._search import golden_section
from .frank_wolfe import CertifiedValue, frank_wolfe_blocks, local_min
from .objective import Evaluator, ObjectiveSpec, continuity_penalty
from .state import StructuredState

INITIAL_INTERVALS = 16
ON_ARC_TOL = 1e-12


# --- heuristic upper bounds ---------------------------------------------

class HeuristicResult(NamedTuple):
    value: float
    argmin: tuple  # (theta_a, r_z, r_x, StructuredState)


def _rank_limited_min(ev: Evaluator, rng: np.random.Generator, starts: int = 4):
    """Minimise over states of rank <= 2 (one rank-1 projector per block, or one block only)."""
    from scipy.optimize import minimize as _min

    def assemble(x, mode):
        if mode == 0:
            u = x[:2]
            v = x[2:4]
            b = np.array([np.outer(u, u), np.outer(v, v)])
        else:
            L = x.reshape(2, 2)
            b = np.zeros((2, 2, 2))
            b[mode - 1] = L @ L.T
        t = np.trace(b[0]) + np.trace(b[1])
        return b / t

    best = (np.inf, None)
    for mode in (0, 1, 2):
        for _ in range(starts):
            x0 = rng.normal(size=4)
            res = _min(lambda x: ev.value(assemble(x, mode)), x0, method="Nelder-Mead",
                       options=dict(xatol=1e-10, fatol=1e-13, maxiter=4000))
            if res.fun < best[0]:
                best = (res.fun, assemble(res.x, mode))
    return best[1], best[0]


def _angles_value(spec, ta, tb, cache, max_rank):
    ev = Evaluator(spec, ta, (math.cos(tb), math.sin(tb)))
    if max_rank is not None and max_rank <= 2:
        b, v = _rank_limited_min(ev, np.random.default_rng(abs(hash((round(ta, 12), round(tb, 12)))) % 2**32))
    else:
        b, v = local_min(ev, cache.get("start"))
        cache["start"] = b
    return v, b


def heuristic_min(spec: ObjectiveSpec, restarts: int = 8, seed: int = 0,
                  max_rank: Optional[int] = None) -> HeuristicResult:
    """Feasible value of ``min F`` over angles and states, from random restarts.

    For fixed angles the objective is convex in the state, so the inner
    problem is solved to optimality by :func:`local_min`; the two angles are
    searched with bounded Nelder-Mead from ``restarts`` random starts (the
    first start is the CHSH-optimal configuration). ``max_rank=2`` restricts
    the state to rank two for comparison purposes.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = np.random.default_rng(seed)
    best = (np.inf, None)
    cache: dict = {}
    starts = [(math.pi / 2, math.pi / 2)] + [tuple(rng.uniform(0, math.pi, 2)) for _ in range(restarts - 1)]
    for ta0, tb0 in starts:
        def fun(x):
            ta = float(np.clip(x[0], 0.0, math.pi))
            tb = float(np.clip(x[1], 0.0, math.pi))
            return _angles_value(spec, ta, tb, cache, max_rank)[0]

        res = minimize(fun, np.array([ta0, tb0]), method="Nelder-Mead",
                       bounds=[(0.0, math.pi), (0.0, math.pi)],
                       options=dict(xatol=1e-7, fatol=1e-12, maxiter=400))
        ta, tb = (float(np.clip(v, 0.0, math.pi)) for v in res.x)
        value, blocks = _angles_value(spec, ta, tb, cache, max_rank)
        if value < best[0]:
            best = (value, (ta, math.cos(tb), math.sin(tb), StructuredState.from_blocks(blocks)))
    return HeuristicResult(float(best[0]), best[1])


def optimize_lambda(p: float, nu_target: float, weights=(0.5, 0.5), lam_max: float = 2.5,
                    restarts: int = 3, seed: int = 0, tol: float = 1e-3):
    """Golden-section search for the CHSH multiplier maximising the bound at ``nu_target``.

    Returns ``(lam, bound_at_target, c_lambda)`` using heuristic values of
    ``c_lambda``.
    """
    cache = {}

    def neg_bound(lam):
        spec = ObjectiveSpec.chsh(lam, p, weights)
        c = heuristic_min(spec, restarts, seed).value
        cache[lam] = c
        return -(lam * nu_target + c)

    lam, val = golden_section(neg_bound, 0.0, lam_max, tol)
    return lam, -val, cache[lam]


# --- branch and bound ----------------------------------------------------

def _arc_point(arc) -> tuple:
    lo, hi = arc
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    scale = 1.0 / math.cos(half)
    return (scale * math.cos(mid), scale * math.sin(mid))


@dataclass
class _Vertex:
    arc: tuple
    bound: float = -math.inf  # valid over the whole leaf interval
    blocks: Optional[np.ndarray] = None

    @property
    def on_arc(self) -> bool:
        return self.arc[1] - self.arc[0] <= ON_ARC_TOL


@dataclass
class _Leaf:
    lo: float
    hi: float
    vertices: list = field(default_factory=list)

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def half(self) -> float:
        return 0.5 * (self.hi - self.lo)

    @property
    def bound(self) -> float:
        return min(v.bound for v in self.vertices)


def _solve_leaf(job):
    spec, theta, r, start, fw_tol, max_iters = job
    ev = Evaluator(spec, theta, r)
    blocks, _ = local_min(ev, start)
    res = frank_wolfe_blocks(ev, blocks, fw_tol, max_iters)
    return res.lower_bound, res.feasible_value, res.argmin[0]


def _initial_vertices():
    return [_Vertex((0.0, 0.0)), _Vertex((0.0, math.pi / 2)),
            _Vertex((math.pi / 2, math.pi)), _Vertex((math.pi, math.pi))]


def certify_c_lambda(spec: ObjectiveSpec, gap_tol: float = 0.03, budget: int = 20000,
                     *, fw_tol: Optional[float] = None, fw_max_iters: int = 200,
                     initial_intervals: int = INITIAL_INTERVALS, batch: int = 8,
                     workers: int = 1, restarts: int = 6, seed: int = 0,
                     feasible: Optional[HeuristicResult] = None) -> CertifiedValue:
    """Certified lower bound on ``c_lambda = min F`` over all angles and states.

    Each leaf is an interval of Alice's angle with its own polygon of Bob
    vertices; its bound is the smallest Frank-Wolfe lower bound over the
    vertices at the interval centre minus :func:`continuity_penalty` of the
    half-width. The worst leaves are refined in batches of ``batch``:
    a worst vertex whose centre bound is already below the target is split
    into two tangent-line vertices, otherwise the interval is bisected.
    The loop stops once every leaf clears ``feasible - gap_tol`` or after
    ``budget`` leaf solves. Results do not depend on ``workers``.
    """
    if gap_tol <= 0:
        raise ValueError("gap_tol must be positive")
    t0 = time.perf_counter()
    fw_tol = gap_tol / 100.0 if fw_tol is None else fw_tol
    if feasible is None:
        feasible = heuristic_min(spec, restarts, seed)
    best_f, best_arg = feasible.value, feasible.argmin

    lam = spec.lagrange
    if spec.weights[1] == 0.0 and lam.l10 == 0.0 and lam.l11 == 0.0:
        # nothing depends on Alice's second angle
        leaves = [_Leaf(0.0, 0.0, _initial_vertices())]
    else:
        edges = np.linspace(0.0, math.pi, initial_intervals + 1)
        leaves = [_Leaf(a, b, _initial_vertices()) for a, b in zip(edges[:-1], edges[1:])]

    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    mapper = pool.map if pool is not None else map
    solves = 0

    def run(tasks):
        """tasks: list of (leaf, vertex). Updates vertex bounds in place."""
        nonlocal solves, best_f, best_arg
        jobs = [(spec, leaf.center, _arc_point(v.arc), v.blocks, fw_tol, fw_max_iters)
                for leaf, v in tasks]
        pen = {}
        for (leaf, v), (lb, f, blocks) in zip(tasks, mapper(_solve_leaf, jobs, chunksize=4) if pool else map(_solve_leaf, jobs)):
            solves += 1
            h = leaf.half
            if h not in pen:
                pen[h] = continuity_penalty(h, spec)
            v.bound = max(v.bound, lb - pen[h])
            v.blocks = blocks
            if v.on_arc and f < best_f:
                best_f = f
                r = _arc_point(v.arc)
                best_arg = (leaf.center, r[0], r[1], StructuredState.from_blocks(blocks))

    try:
        run([(leaf, v) for leaf in leaves for v in leaf.vertices])
        heap = [(leaf.bound, i, leaf) for i, leaf in enumerate(leaves)]
        heapq.heapify(heap)
        counter = len(leaves)
        converged = False
        while True:
            target = best_f - gap_tol
            if heap[0][0] >= target:
                converged = True
                break
            if solves >= budget:
                break
            picked = []
            while heap and heap[0][0] < target and len(picked) < batch:
                picked.append(heapq.heappop(heap)[2])
            tasks = []
            new_leaves = []
            for leaf in picked:
                worst = min(leaf.vertices, key=lambda v: v.bound)
                centre_lb = worst.bound + continuity_penalty(leaf.half, spec)
                if centre_lb < target and not worst.on_arc:
                    lo, hi = worst.arc
                    mid = 0.5 * (lo + hi)
                    kids = [_Vertex((lo, mid), blocks=worst.blocks), _Vertex((mid, hi), blocks=worst.blocks)]
                    i = leaf.vertices.index(worst)
                    leaf.vertices[i:i + 1] = kids
                    tasks += [(leaf, k) for k in kids]
                    new_leaves.append(leaf)
                elif leaf.half > 0.0:
                    mid = leaf.center
                    for a, b in ((leaf.lo, mid), (mid, leaf.hi)):
                        child = _Leaf(a, b, [_Vertex(v.arc, v.bound, v.blocks) for v in leaf.vertices])
                        tasks += [(child, v) for v in child.vertices if v.bound < target]
                        new_leaves.append(child)
                else:
                    # single-angle leaf whose worst vertex is on the arc:
                    # tighten Frank-Wolfe instead
                    worst.bound = -math.inf
                    tasks.append((leaf, worst))
                    new_leaves.append(leaf)
            run(tasks)
            for leaf in new_leaves:
                heapq.heappush(heap, (leaf.bound, counter, leaf))
                counter += 1
    finally:
        if pool is not None:
            pool.shutdown()

    lower = min(entry[0] for entry in heap)
    out = CertifiedValue(lower, best_f, best_arg, solves, converged and best_f - lower <= gap_tol)
    out.history = [dict(leaves=len(heap), wall_time=time.perf_counter() - t0,
                        max_vertices=max(len(e[2].vertices) for e in heap),
                        min_width=min(e[2].hi - e[2].lo for e in heap))]
    return out
