import math

import numpy as np
import pytest

from diqkd.attack import Q2, attack_entropies, q_att, q_att_limit, q_att_limit_alt
from diqkd.certifier.bounds import paper_bounds
from diqkd.linalg import binary_entropy


def test_attack_entropies_endpoints():
    assert attack_entropies(0.0, 0.3).h_eve == pytest.approx(1.0)
    ev = attack_entropies(Q2, 0.3)
    assert ev.h_eve == pytest.approx(binary_entropy(0.3))
    assert ev.p_bell == pytest.approx(0.0, abs=1e-15)
    beyond = attack_entropies(0.2, 0.1)
    assert beyond.lhv_only and beyond.p_bell == 0.0


def test_attack_entropies_formula():
    ev = attack_entropies(0.05, 0.3)
    pb = (Q2 - 0.05) / Q2
    assert ev.h_eve == pytest.approx(pb + (1 - pb) * binary_entropy(0.3))
    assert ev.h_bob == pytest.approx(binary_entropy(0.3 + 0.4 * 0.05))


def test_q_att_at_zero_bias_solves_defining_equation():
    q = q_att(0.0)
    assert 1 - q / Q2 == pytest.approx(binary_entropy(q), abs=1e-9)


def test_q_att_monotone_and_below_limit():
    grid = [0.0, 0.1, 0.2, 0.3, 0.4, 0.45]
    vals = [q_att(p) for p in grid]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert all(v <= q_att_limit() for v in vals)
    assert q_att(0.3) == pytest.approx(0.0951, abs=1e-4)


def test_limit_closed_forms_agree():
    assert q_att_limit() == pytest.approx(q_att_limit_alt(), abs=1e-14)
    assert q_att_limit() == pytest.approx(0.0957, abs=1e-4)
    assert q_att(0.4999) == pytest.approx(q_att_limit(), abs=1e-4)


def test_builtin_bounds_never_exceed_attack_entropy():
    for p, bound in paper_bounds().items():
        for q in np.linspace(0.0, Q2, 41):
            nu = 2 * math.sqrt(2) * (1 - 2 * q)
            assert bound.at_nu(nu) <= attack_entropies(q, p).h_eve + 1e-9


def test_rejects_out_of_range():
    with pytest.raises(ValueError):
        q_att(0.5)
    with pytest.raises(ValueError):
        attack_entropies(-0.1, 0.2)
