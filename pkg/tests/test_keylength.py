import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from diqkd.certifier.bounds import affine_bound, paper_bound
from diqkd.devices import W_TSIRELSON, depolarizing_model, h_hon, h_hon_preshared
from diqkd.finite_size import (EpsilonLedger, FiniteSizeInputs, asymptotic_rate, g_of_w,
                               key_length_collective, key_length_general, key_length_general_raw,
                               key_length_general_terms, lin_in_w, make_g,
                               make_g_tilde, noise_threshold, tradeoff_stats, v_and_k)
from diqkd.finite_size.keylength import (DIM_PRESHARED, Q_HI, Q_LO, eps_iid_optcoll, eps_pe_optcoll,
                                         key_length_optcoll_raw)
from oracles import exact_binom_cdf

LIN_0 = paper_bound(0.0)
LIN_2 = paper_bound(0.2)
LEDGER = EpsilonLedger(5e-3, 5e-3, 5e-7, 2.5e-7, 2.5e-7, 1.25e-7, 3e-8, 3e-8)


def inputs(n=10 ** 10, gamma=1e-3, delta=1e-3, ec=None, **kw):
    model = depolarizing_model(0.02, gamma=gamma)
    if ec is None:
        ec = math.ceil(n * h_hon(model))
    g = make_g(LIN_0, LIN_0, gamma)
    kw.setdefault("beta", max(g(0.0), g(1.0)) - 1e-6)
    kw.setdefault("alpha", 1.0 + 1e-3)
    kw.setdefault("alpha_prime", 1.0 + 1e-3)
    return FiniteSizeInputs(n, gamma, 0.0, delta, ec, LEDGER, **kw), g, model.w_exp


def f_min_values(g, gamma, beta):
    """f on the outcomes (test won, test lost, generation round)."""
    return np.array([g(1.0) / gamma + (1 - 1 / gamma) * beta, g(0.0) / gamma + (1 - 1 / gamma) * beta, beta])


def test_lin_in_w_matches_nu_form():
    for w in np.linspace(0.5, W_TSIRELSON, 7):
        assert lin_in_w(LIN_2)(w) == pytest.approx(LIN_2.at_nu(8 * w - 4), abs=1e-14)


def test_g_endpoints_in_gamma():
    w = 0.8
    assert g_of_w(LIN_2, LIN_0, 0.0, w) == pytest.approx(0.5 * LIN_2.at_w(w))
    assert g_of_w(LIN_2, LIN_0, 1.0, w) == pytest.approx(LIN_0.at_w(w))
    assert g_of_w(LIN_0, LIN_0, 0.0, W_TSIRELSON) == pytest.approx(0.5 * 0.98129, abs=5e-6)
    assert make_g_tilde(LIN_2, LIN_0, 0.0)(w) == pytest.approx(LIN_2.at_w(w))
    with pytest.raises(ValueError):
        g_of_w(LIN_2, LIN_0, 0.1, 1.2)


@given(gamma=st.floats(1e-4, 1.0), frac=st.floats(0.0, 1.0))
@settings(max_examples=100, deadline=None)
def test_tradeoff_stats_against_outcome_distribution(gamma, frac):
    g = make_g(LIN_2, LIN_0, gamma)
    lo, hi = sorted((g(0.0), g(1.0)))
    beta = lo + frac * (hi - lo)
    s = tradeoff_stats(g, gamma, beta)
    f = f_min_values(g, gamma, beta)
    assert s.max_f == pytest.approx(f.max(), rel=1e-12, abs=1e-12)
    ws = np.linspace(Q_LO, Q_HI, 201)
    # the mean of f under the honest distribution is g(w)
    for w in ws[::50]:
        probs = np.array([gamma * w, gamma * (1 - w), 1 - gamma])
        assert probs @ f == pytest.approx(g(w), rel=1e-9, abs=1e-9 * abs(f).max())
    assert s.min_f == pytest.approx(min(g(w) for w in ws), abs=1e-12)
    var = [np.array([gamma * w, gamma * (1 - w), 1 - gamma]) @ (f - g(w)) ** 2 for w in ws]
    assert max(var) <= s.var_f_bound * (1 + 1e-9) + 1e-12


def test_tradeoff_rejects_beta_outside_bracket():
    g = make_g(LIN_0, LIN_0, 0.1)
    with pytest.raises(ValueError):
        tradeoff_stats(g, 0.1, max(g(0.0), g(1.0)) + 0.1)
    with pytest.raises(ValueError):
        tradeoff_stats(g, 0.0, 0.0)


def test_v_and_k_reference_values():
    zero = type(tradeoff_stats(make_g(LIN_0, LIN_0, 0.5), 0.5, 0.0))(0.0, 0.0, 0.0)
    v, k = v_and_k(zero, 1.5)
    assert v == pytest.approx(math.sqrt(2) + math.log2(73), rel=1e-14)
    s = 2 * mpmath.log(6, 2)
    k_ref = 2 ** (mpmath.mpf(0.5) * s) / (6 * mpmath.mpf(0.5) ** 3 * mpmath.log(2)) * mpmath.log(2 ** s + mpmath.e ** 2) ** 3
    assert k == pytest.approx(float(k_ref), rel=1e-12)
    # alpha -> 1 limit
    assert v_and_k(zero, 1 + 1e-12)[1] == pytest.approx(math.log(36 + math.e ** 2) ** 3 / (6 * math.log(2)), rel=1e-9)
    v12, _ = v_and_k(zero, 1.5, DIM_PRESHARED)
    assert v12 == pytest.approx(math.sqrt(2) + math.log2(289), rel=1e-14)
    # a huge spread must not overflow the log term
    big = type(zero)(3000.0, 0.0, 1.0)
    assert math.isfinite(math.log(v_and_k(big, 1.0001)[1]))
    with pytest.raises(ValueError):
        v_and_k(zero, 2.0)


def test_terms_add_up_and_floor():
    inp, g, w = inputs()
    t = key_length_general_terms(inp, g, w)
    manual = (t.leading - t.second_order - t.third_order - t.testing - t.alpha_prime_term - t.smoothing
              - t.ea - t.ec - t.hashing - t.pa + 2)
    assert t.total == pytest.approx(manual)
    assert t.leading == pytest.approx(inp.n * g(w - inp.delta_tol))
    assert key_length_general(inp, g, w) == max(0, math.floor(key_length_general_raw(inp, g, w)))


def test_small_n_has_no_key():
    inp, g, w = inputs(n=1000, gamma=0.1, delta=0.05)
    assert key_length_general_raw(inp, g, w) < 0
    assert key_length_general(inp, g, w) == 0


def test_key_length_monotone_in_costs():
    inp, g, w = inputs()
    base = key_length_general_raw(inp, g, w)
    assert key_length_general_raw(inp.with_(ec_max=inp.ec_max + 1000), g, w) == pytest.approx(base - 1000)
    assert key_length_general_raw(inp.with_(delta_tol=2e-3), g, w) < base
    tighter = EpsilonLedger(5e-3, 5e-3, 5e-8, 2.5e-8, 2.5e-8, 1.25e-8, 3e-9, 3e-9)
    assert key_length_general_raw(inp.with_(eps=tighter), g, w) < base


def test_ledger_constraints():
    inp, g, w = inputs()
    bad = EpsilonLedger(5e-3, 5e-3, 5e-7, 2.5e-7, 2.5e-7, 1e-8, 5e-9, 5e-9)
    with pytest.raises(ValueError):
        key_length_general_raw(inp.with_(eps=bad), g, w)
    with pytest.raises(ValueError):
        EpsilonLedger(0.0, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3)
    assert LEDGER.soundness_general() == pytest.approx(max(5e-7, 2.5e-7 + 2.5e-7) + 5e-7)
    with pytest.raises(ValueError):
        key_length_general_raw(inp.with_(alpha_prime=1 + 2 / (2 * math.log2(7))), g, w)


def test_collective_dominates_general_at_same_parameters():
    for n in (10 ** 8, 10 ** 10, 10 ** 12):
        inp, g, w = inputs(n=n)
        coll, eps_iid = key_length_collective(inp, g, w)
        assert coll >= key_length_general(inp, g, w)
        assert 0.0 <= eps_iid <= 1.0


def test_optcoll_tails_against_exact_sums():
    m, w, d = 2000, 0.8, 0.03
    assert eps_pe_optcoll(m, w, d) == pytest.approx(float(exact_binom_cdf(m, w, math.floor((w - d) * m))),
                                                    rel=1e-12)
    assert eps_iid_optcoll(m, w, d, 0.02) == pytest.approx(
        float(exact_binom_cdf(m, 1 - w + d + 0.02, math.floor((1 - w + d) * m))), rel=1e-12)


def test_optcoll_needs_test_rounds():
    model = depolarizing_model(0.02, gamma=0.01)
    inp = FiniteSizeInputs(100, 1e-4, 0.0, 0.01, 0, LEDGER)
    _, eps_iid, eps_pe = key_length_optcoll_raw(inp, lin_in_w(LIN_0), model.w_exp)
    assert eps_iid == eps_pe == 1.0


def test_asymptotic_rate_values():
    assert asymptotic_rate(LIN_0, depolarizing_model(0.0)) == pytest.approx(0.490645, abs=3e-6)
    m = depolarizing_model(0.05)
    assert asymptotic_rate(LIN_0, m, "preshared") == pytest.approx(2 * asymptotic_rate(LIN_0, m))
    with pytest.raises(ValueError):
        asymptotic_rate(LIN_0, m, "other")


def test_threshold_matches_independent_root_finder():
    for p in (0.0, 0.2, 0.3):
        b = paper_bound(p)
        q = noise_threshold(b, p)
        ref = brentq(lambda x: asymptotic_rate(b, depolarizing_model(x, p)), 0.0, Q_LO, xtol=1e-12)
        assert q == pytest.approx(ref, abs=2e-6)


def test_threshold_edge_cases():
    hopeless = affine_bound(0.0, -1.0, 0.0)
    assert noise_threshold(hopeless, 0.0) == 0.0
    generous = affine_bound(0.0, 5.0, 0.0)
    assert noise_threshold(generous, 0.0) == pytest.approx(Q_LO)


def test_preshared_honest_entropy_doubles_in_small_gamma_limit():
    for q in (0.02, 0.05, 0.08):
        m = depolarizing_model(q, gamma=1e-9)
        assert h_hon_preshared(m) == pytest.approx(2 * h_hon(m), rel=1e-6)
