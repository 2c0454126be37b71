import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, strategies as st

from enrichedhist.barypoly import BaryPoly
from enrichedhist.bases import build_q_default, make_bundle
from enrichedhist.geometry import Simplex, reference_simplex
from enrichedhist.moments import WeightSpec
from enrichedhist.momentsystem import (
    FaceFunctionalError, UnisolvenceError, assemble, det_tolerance, regularized_beta, scale,
    scaled_stability, stability, unisolvence,
)
from conftest import random_tet

T2, T3 = reference_simplex(2), reference_simplex(3)


def system(w, config="split", s=T3, **kw):
    return assemble(s, w, make_bundle(s, w, config, **kw))


def dirichlet_A(alpha):
    alpha = np.asarray(alpha, float)
    S = alpha.sum()
    A = alpha[None, :] / (S - alpha[:, None])
    np.fill_diagonal(A, 0.0)
    return A


def test_face_block_d2_default_is_permuted_diagonal():
    M = system(WeightSpec.constant(2), s=T2).M
    nz = np.abs(M) > 1e-12
    assert nz.sum() == 3 and np.all(nz.sum(0) == 1) and np.all(nz.sum(1) == 1)
    np.testing.assert_allclose(np.abs(M[nz]), np.sqrt(5) / 30, rtol=1e-12)


def test_face_block_d2_diagonal_choice():
    w = WeightSpec.constant(2)
    b = make_bundle(T2, w, "split", shift=1)
    mu0 = BaryPoly.coordinate(2, 0)
    b = replace(b, q=(6 * mu0 * mu0 - 6 * mu0 + 1,) * 3)
    np.testing.assert_allclose(assemble(T2, w, b).M, -np.eye(3) / 30, atol=1e-12)


@pytest.mark.parametrize("alpha", [[1, 1, 1, 1], [0.5, 2, 3.5, 1.2], [4, 4, 1, 2]])
def test_dirichlet_A(alpha):
    sys = system(WeightSpec.dirichlet(alpha))
    np.testing.assert_allclose(sys.A, dirichlet_A(alpha), rtol=1e-12)


def test_detA_d2_formula():
    A = system(WeightSpec.constant(2), s=T2).A
    np.testing.assert_allclose(A, [[0, .5, .5], [.5, 0, .5], [.5, .5, 0]], atol=1e-15)
    assert np.linalg.det(A) == pytest.approx(0.25, rel=1e-13)


def test_split_blocks():
    sys = system(WeightSpec.affine([1, 2, 3, 4]))
    np.testing.assert_allclose(sys.G, np.eye(2), atol=1e-10)
    np.testing.assert_allclose(sys.C, 0, atol=1e-10)
    assert sys.H.shape == (6, 6)
    assert sys.iface_quad.shape == (4, 6)


def test_canonical_stability():
    rep = stability(system(WeightSpec.dirichlet([2, 3, 1, 0.7]), "canonical"))
    np.testing.assert_allclose(rep.T, np.eye(4), atol=1e-9)
    np.testing.assert_allclose(rep.S, np.eye(2), atol=1e-9)
    np.testing.assert_allclose(rep.Shat, np.eye(2), atol=1e-9)
    assert rep.beta == pytest.approx(1.0, abs=1e-9)


def test_k22_positive_definite_and_congruence(rng):
    sys = system(WeightSpec.dirichlet(rng.uniform(0.5, 5, 4)), "raw")
    rep = stability(sys)
    assert np.linalg.eigvalsh(rep.K22)[0] > 0
    s_sign = np.sign(np.linalg.eigvalsh(rep.S))
    shat_sign = np.sign(np.linalg.eigvalsh(rep.Shat))
    np.testing.assert_array_equal(s_sign, shat_sign)
    assert np.linalg.norm(rep.S - rep.S.T) <= 1e-10 * np.linalg.norm(rep.S)


def test_rayleigh_sampling(rng):
    sys = system(WeightSpec.dirichlet([1.5, 2.5, 3.0, 0.9]), "raw")
    rep = stability(sys)
    X = rng.normal(size=(20000, sys.dtilde))
    X /= np.sqrt(np.einsum("ni,ij,nj->n", X, sys.G, X))[:, None]
    vals = np.einsum("ni,ij,nj->n", X, rep.S, X)
    assert vals.min() >= rep.beta ** 2 * (1 - 1e-10)
    assert vals.min() <= 1.05 * rep.beta ** 2


def test_unisolvence_verdicts(rng):
    for w in (WeightSpec.dirichlet(rng.uniform(0.3, 6, 4)), WeightSpec.affine(rng.uniform(0.1, 6, 4))):
        s = Simplex(random_tet(rng))
        rep = unisolvence(system(w, "raw", s=s))
        assert rep.unisolvent, rep.diagnosis
        assert rep.detH == pytest.approx(rep.detG * rep.detT, rel=1e-9)


def test_dependent_psi_is_flagged():
    w = WeightSpec.constant(3)
    b = make_bundle(T3, w, "raw")
    b = replace(b, psi=(b.psi[0], b.psi[0], b.psi[2], b.psi[3]))
    sys = assemble(T3, w, b)
    rep = unisolvence(sys)
    assert not rep.unisolvent and rep.diagnosis == "G not SPD"
    with pytest.raises(UnisolvenceError):
        stability(sys)


def test_singular_face_block():
    w = WeightSpec.constant(3)
    b = make_bundle(T3, w, "split")
    q = list(b.q)
    q[1] = build_q_default(T3, w, 1, lstar=2)   # same column as row 0
    with pytest.raises(FaceFunctionalError):
        stability(assemble(T3, w, replace(b, q=tuple(q))))


def test_scale():
    sys = system(WeightSpec.dirichlet([2, 2, 2, 2]), "raw")
    sc = scale(sys, np.ones(4), np.ones(2))
    np.testing.assert_array_equal(sc.Htilde, sys.H)
    sc3 = scale(sys, 3 * np.ones(4), 3 * np.ones(2))
    assert sc3.kappa == pytest.approx(sc.kappa, rel=1e-9)
    rng = np.random.default_rng(5)
    th, up = rng.uniform(0.2, 5, 4), rng.uniform(0.2, 5, 2)
    sc = scale(sys, th, up)
    expected = np.prod(th) * np.prod(up) * np.linalg.det(sys.H)
    assert np.linalg.det(sc.Htilde) == pytest.approx(expected, rel=1e-9)
    assert abs(np.linalg.det(sc.Htilde)) > det_tolerance(sc.Htilde)
    with pytest.raises(ValueError):
        scale(sys, -np.ones(4), np.ones(2))
    assert scaled_stability(sys, th, up).beta > 0


def test_regularized_beta():
    sys = system(WeightSpec.constant(3), "canonical")
    rep = stability(sys)
    assert regularized_beta(sys, 0.0, rep) == pytest.approx(rep.beta)
    assert regularized_beta(sys, 0.5, rep) == pytest.approx(np.sqrt(1.5), rel=1e-9)
    split = system(WeightSpec.dirichlet([3, 1, 2, 2]), "split")
    r2 = stability(split)
    assert regularized_beta(split, 0.2, r2) ** 2 == pytest.approx(r2.beta ** 2 + 0.2, rel=1e-9)
    with pytest.raises(ValueError):
        regularized_beta(sys, -1.0)


weights = st.one_of(
    st.lists(st.floats(0.3, 6.0), min_size=4, max_size=4).map(WeightSpec.dirichlet),
    st.lists(st.floats(0.1, 6.0), min_size=4, max_size=4).map(WeightSpec.affine),
)


@given(weights, st.sampled_from(["split", "raw"]))
def test_structural_invariants(w, config):
    sys = system(w, config)
    np.testing.assert_allclose(sys.A.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.diag(sys.A), 0.0, atol=1e-12)
    assert np.linalg.eigvalsh(sys.G)[0] > 0
    rep = unisolvence(sys)
    assert rep.unisolvent
    assert abs(rep.detH - rep.detG * rep.detT) <= 1e-9 * abs(rep.detH)
