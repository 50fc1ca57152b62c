import math

import numpy as np
import pytest

from diqkd.certifier.frank_wolfe import blocks_to_params, frank_wolfe, local_min, perturb
from diqkd.certifier.objective import Evaluator, ObjectiveSpec
from diqkd.certifier.state import StructuredState, block_eigenvalues, random_blocks
from oracles import random_spec


def test_perturb_makes_states_positive_definite():
    pure = StructuredState.bell("psi_minus").blocks()
    out = perturb(pure)
    assert block_eigenvalues(out).min() > 0.0
    assert np.trace(out[0]) + np.trace(out[1]) == pytest.approx(1.0)
    bad = pure.copy()
    bad[1] = np.diag([-1e-3, 1e-3])
    assert block_eigenvalues(perturb(bad)).min() > 0.0


def test_params_roundtrip():
    from diqkd.certifier.frank_wolfe import _params_to_blocks
    b = random_blocks(np.random.default_rng(2))
    assert np.allclose(_params_to_blocks(blocks_to_params(b))[0], b, atol=1e-12)


def test_lower_bound_below_feasible_values_on_random_specs():
    rng = np.random.default_rng(99)
    for _ in range(50):
        spec = random_spec(rng)
        ta = rng.uniform(0, math.pi)
        tb = rng.uniform(0, math.pi)
        r = (math.cos(tb), math.sin(tb))
        res = frank_wolfe(spec, ta, r, eps_tol=1e-6, max_iters=300)
        ev = Evaluator(spec, ta, r)
        feasible = min([local_min(ev, random_blocks(rng))[1]]
                       + [ev.value(random_blocks(rng)) for _ in range(20)])
        assert res.lower_bound <= feasible + 1e-12
        assert res.lower_bound <= res.feasible_value + 1e-12


def test_gap_closes_and_history_is_consistent():
    spec = ObjectiveSpec.chsh(0.8, 0.1)
    res = frank_wolfe(spec, math.pi / 2, (0.0, 1.0), eps_tol=1e-8)
    assert res.converged
    assert res.gap <= 1e-8 + 1e-12
    best = [h[2] for h in res.history]
    assert all(b2 >= b1 for b1, b2 in zip(best, best[1:]))


def test_cold_start_reaches_same_value():
    spec = ObjectiveSpec.chsh(0.5, 0.2)
    warm = frank_wolfe(spec, 1.0, (0.6, 0.8), eps_tol=1e-5)
    cold = frank_wolfe(spec, 1.0, (0.6, 0.8), eps_tol=1e-3, warm_start=False, max_iters=3000)
    assert cold.lower_bound <= warm.feasible_value + 1e-12
    assert cold.feasible_value == pytest.approx(warm.feasible_value, abs=2e-3)


def test_rejects_bad_tolerance():
    with pytest.raises(ValueError):
        frank_wolfe(ObjectiveSpec.chsh(1.0), 0.0, (1.0, 0.0), eps_tol=0.0)
