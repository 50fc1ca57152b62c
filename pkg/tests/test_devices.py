import math

import numpy as np
import pytest

from diqkd.devices import (W_TSIRELSON, EcModel, HonestDeviceModel, depolarizing_model, ec_max, h_hon,
                           h_hon_generation_only, h_hon_preshared, model_from_config, simulate_honest_counts,
                           simulate_many, simulate_rounds, spawn_rngs)
from diqkd.linalg import binary_entropy


def test_depolarizing_model_statistics():
    m = depolarizing_model(0.0)
    assert m.w_exp == pytest.approx(W_TSIRELSON)
    m = depolarizing_model(0.05, p=0.1, gamma=0.02)
    assert m.w_exp == pytest.approx(0.9 * W_TSIRELSON + 0.05)
    assert m.key_error == pytest.approx(0.1 + 0.8 * 0.05)
    with pytest.raises(ValueError):
        depolarizing_model(0.6)
    with pytest.raises(ValueError):
        depolarizing_model(0.05, gamma=0.0)


def test_model_validation():
    with pytest.raises(ValueError):
        HonestDeviceModel(0.9, 0.05)
    with pytest.raises(ValueError):
        HonestDeviceModel(0.8, 0.05, p=0.7)


def test_honest_entropies():
    m = HonestDeviceModel(0.797, 0.06, 0.0, gamma=0.1)
    assert h_hon(m) == pytest.approx(0.45 * binary_entropy(0.06) + 0.1 * binary_entropy(0.797))
    assert h_hon_preshared(m) == pytest.approx(0.9 * binary_entropy(0.06) + 0.1 * binary_entropy(0.797))
    assert h_hon_generation_only(m) == pytest.approx(binary_entropy(0.06))


def test_ec_budget():
    m = HonestDeviceModel(0.797, 0.06)
    assert ec_max(m, EcModel("practical", xi=1.1), 1000, 0.5) == math.ceil(1.1 * 1000 * 0.5)
    ec = EcModel(eps_ec_com=1e-3, eps0=5e-4)
    n, h = 10 ** 6, 0.3
    expected = n * h + math.sqrt(n) * 2 * math.log2(5) * math.sqrt(math.log2(2 / 5e-4 ** 2)) \
        + 2 * math.log2(1 / 5e-4) + 4
    assert ec_max(m, ec, n, h) == math.ceil(expected)
    assert ec_max(m, ec, 2 * n, h) > ec_max(m, ec, n, h)
    with pytest.raises(ValueError):
        EcModel(eps_ec_com=1e-3, eps0=2e-3)
    with pytest.raises(ValueError):
        EcModel(mode="turbo")


def test_simulation_is_reproducible_and_unbiased():
    m = depolarizing_model(0.05, gamma=0.1)
    assert simulate_honest_counts(m, 10 ** 5, 42) == simulate_honest_counts(m, 10 ** 5, 42)
    assert simulate_rounds(m, 1000, 1) == simulate_rounds(m, 1000, 1)
    wins, losses, tests = simulate_many(m, 10 ** 4, 4000, 7)
    assert np.all(wins + losses == tests)
    # hierarchical draws have the right means (5 standard errors)
    assert abs(tests.mean() - 1000) < 5 * math.sqrt(10 ** 4 * 0.1 * 0.9 / 4000)
    p_win = 0.1 * m.w_exp
    assert abs(wins.mean() - 10 ** 4 * p_win) < 5 * math.sqrt(10 ** 4 * p_win * (1 - p_win) / 4000)


def test_round_and_count_samplers_agree_in_distribution():
    m = depolarizing_model(0.08, gamma=0.2)
    per_round = np.array([simulate_rounds(m, 500, s)[0] for s in range(400)])
    counts = simulate_many(m, 500, 400, 3)[0]
    se = math.sqrt(500 * 0.2 * m.w_exp * (1 - 0.2 * m.w_exp) * 2 / 400)
    assert abs(per_round.mean() - counts.mean()) < 5 * se


def test_spawned_streams_differ():
    a, b = spawn_rngs(1, 2)
    assert a.random() != b.random()


def test_model_from_config():
    model, ec = model_from_config({"q": 0.05, "p": 0.1, "gamma": 0.02, "ec": {"mode": "practical", "xi": 1.2}})
    assert model.q == 0.05 and ec.mode == "practical" and ec.xi == 1.2
    model, _ = model_from_config({"w_exp": 0.797, "p_err": 0.06})
    assert model.w_exp == 0.797
    with pytest.raises(ValueError):
        model_from_config({"p": 0.1})
