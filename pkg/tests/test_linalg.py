import numpy as np
import pytest
from hypothesis import given, strategies as st

from enrichedhist.linalg import NotSymmetricError, SingularGramError, cond2, inv_sqrt_spd, sym_eig


def _spd(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T + n * np.eye(n)


def test_sym_eig_simple():
    w, v = sym_eig(np.eye(4))
    np.testing.assert_allclose(w, 1.0)
    w, v = sym_eig(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(w, [1, 2, 3])


def test_sym_eig_two_by_two_quadratic_formula():
    a, b, c = 2.0, 0.7, -1.3
    w, _ = sym_eig(np.array([[a, b], [b, c]]))
    disc = np.sqrt((a - c) ** 2 + 4 * b * b)
    np.testing.assert_allclose(w, [(a + c - disc) / 2, (a + c + disc) / 2], rtol=1e-14)


def test_sym_eig_random_spd(rng):
    A = _spd(rng, 6)
    w, Q = sym_eig(A)
    assert np.all(np.diff(w) >= 0)
    np.testing.assert_allclose(Q.T @ Q, np.eye(6), atol=1e-12)
    assert np.linalg.norm(A - Q @ np.diag(w) @ Q.T) <= 1e-11 * np.linalg.norm(A)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(A), rtol=1e-12)


def test_sym_eig_rejects_nonsymmetric():
    with pytest.raises(NotSymmetricError):
        sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_inv_sqrt():
    np.testing.assert_allclose(inv_sqrt_spd(np.eye(3)), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(inv_sqrt_spd(np.diag([4.0, 9.0])), np.diag([0.5, 1 / 3]), atol=1e-15)
    with pytest.raises(SingularGramError):
        inv_sqrt_spd(np.diag([1.0, 1e-15]))


def test_cond2_matches_svd(rng):
    A = rng.normal(size=(7, 7))
    assert cond2(A) == pytest.approx(np.linalg.cond(A, 2), rel=1e-8)


@given(st.integers(1, 8), st.integers(0, 10 ** 6))
def test_inv_sqrt_identity_property(n, seed):
    G = _spd(np.random.default_rng(seed), n)
    R = inv_sqrt_spd(G)
    np.testing.assert_allclose(R, R.T, atol=1e-13)
    np.testing.assert_allclose(R @ G @ R, np.eye(n), atol=1e-10)
