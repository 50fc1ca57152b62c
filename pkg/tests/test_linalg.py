import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from diqkd import linalg


def random_hermitian(rng, d):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (g + g.conj().T)


def random_state(rng, d):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


@given(seed=st.integers(0, 2**32 - 1), d=st.sampled_from([2, 4, 8]))
@settings(max_examples=60, deadline=None)
def test_eigh_matches_lapack_and_reconstructs(seed, d):
    rng = np.random.default_rng(seed)
    a = random_hermitian(rng, d)
    w, v = linalg.eigh(a)
    assert np.allclose(w, np.linalg.eigvalsh(a), atol=1e-12)
    assert np.allclose(v @ np.diag(w) @ v.conj().T, a, atol=1e-12)
    assert np.allclose(v.conj().T @ v, np.eye(d), atol=1e-12)


def test_eigh_degenerate_and_diagonal():
    w, v = linalg.eigh(np.eye(4))
    assert np.allclose(w, 1.0)
    w, _ = linalg.eigh(np.diag([3.0, -1.0]))
    assert np.allclose(w, [-1.0, 3.0])


def test_as_hermitian_rejects_bad_input():
    with pytest.raises(ValueError):
        linalg.as_hermitian(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        linalg.as_hermitian(np.eye(3))
    with pytest.raises(ValueError):
        linalg.as_hermitian(np.ones((2, 4)))


@given(seed=st.integers(0, 2**32 - 1), d=st.sampled_from([2, 4, 8]))
@settings(max_examples=40, deadline=None)
def test_rel_entropy_matches_matrix_log_oracle(seed, d):
    rng = np.random.default_rng(seed)
    rho, sigma = random_state(rng, d), random_state(rng, d)
    expected = np.trace(rho @ (scipy.linalg.logm(rho) - scipy.linalg.logm(sigma))).real / math.log(2)
    assert linalg.rel_entropy(rho, sigma) == pytest.approx(expected, abs=1e-9)


def test_rel_entropy_classical_case_is_kl_divergence():
    p = np.array([0.5, 0.3, 0.2, 0.0])
    q = np.array([0.25, 0.25, 0.25, 0.25])
    kl = sum(pi * math.log2(pi / qi) for pi, qi in zip(p, q) if pi > 0)
    assert linalg.rel_entropy(np.diag(p), np.diag(q)) == pytest.approx(kl, abs=1e-13)


def test_rel_entropy_zero_on_equal_states_and_support_violation():
    rng = np.random.default_rng(3)
    rho = random_state(rng, 4)
    assert linalg.rel_entropy(rho, rho) == pytest.approx(0.0, abs=1e-11)
    with pytest.raises(linalg.InfiniteDivergence):
        linalg.rel_entropy(np.diag([0.5, 0.5]), np.diag([1.0, 0.0]))
    with pytest.raises(ValueError):
        linalg.rel_entropy(np.diag([0.5, 0.4]), np.diag([0.5, 0.5]))


def test_binary_entropy_values():
    assert linalg.binary_entropy(0.5) == 1.0
    assert linalg.binary_entropy(0.0) == 0.0
    assert linalg.binary_entropy(0.11) == pytest.approx(linalg.binary_entropy(0.89), abs=1e-15)
    assert linalg.binary_entropy(0.25) == pytest.approx(0.8112781244591328, abs=1e-15)
    with pytest.raises(ValueError):
        linalg.binary_entropy(1.2)


def test_von_neumann_entropy_and_kron():
    assert linalg.von_neumann_entropy(np.eye(8) / 8) == pytest.approx(3.0, abs=1e-13)
    assert linalg.kron(np.eye(2), np.eye(4)).shape == (8, 8)
    with pytest.raises(ValueError):
        linalg.kron(np.eye(4), np.eye(4))
