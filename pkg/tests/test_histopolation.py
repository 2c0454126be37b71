import numpy as np
import pytest
from hypothesis import given, strategies as st

from enrichedhist.barypoly import BaryPoly, exponents
from enrichedhist.bases import make_bundle
from enrichedhist.geometry import Simplex, affine_map_between, reference_simplex
from enrichedhist.histopolation import (
    ReferenceScheme, TEST_FUNCTIONS, convergence_study, empirical_orders, global_error,
    solve_local_linear, solve_local_quadratic, benchmark_function,
)
from enrichedhist.mesh import uniform_mesh
from enrichedhist.moments import WeightSpec, functional_data
from enrichedhist.momentsystem import assemble
from conftest import random_tet

T3 = reference_simplex(3)
W1 = WeightSpec.dirichlet([1, 1, 1, 1])


def random_quadratic(rng, n=4):
    return BaryPoly(n, {e: rng.normal() for e in exponents(n, 2)})


def cartesian_quadratic(c):
    def f(p):
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        return (c[0] + c[1] * x + c[2] * y + c[3] * z + c[4] * x * x + c[5] * y * y
                + c[6] * z * z + c[7] * x * y + c[8] * y * z + c[9] * x * z)
    return f


def test_constants_reproduced():
    b = make_bundle(T3, W1, "split")
    data = functional_data(T3, W1, BaryPoly.constant(4, 1.0), b.q, b.rho)
    sol = solve_local_quadratic(T3, W1, b, data)
    np.testing.assert_allclose(sol.a, 1.0, atol=1e-12)
    np.testing.assert_allclose(sol.gamma, 0.0, atol=1e-12)
    np.testing.assert_allclose(sol.xi, 0.0, atol=1e-12)


@pytest.mark.parametrize("w", [W1, WeightSpec.dirichlet([0.6, 2.0, 3.1, 1.4]), WeightSpec.affine([1, 3, 2, 5])])
def test_quadratic_exactness(rng, w):
    s = Simplex(random_tet(rng))
    b = make_bundle(s, w, "split")
    p = random_quadratic(rng)
    sol = solve_local_quadratic(s, w, b, functional_data(s, w, p, b.q, b.rho))
    lam = rng.random((50, 4))
    lam /= lam.sum(axis=1, keepdims=True)
    np.testing.assert_allclose(sol(lam), p(lam), atol=1e-9)
    # data-match invariant
    data = functional_data(s, w, p, b.q, b.rho)
    back = functional_data(s, w, sol.as_poly(), b.q, b.rho)
    np.testing.assert_allclose(back, data, rtol=1e-9, atol=1e-12)


def test_lambda12_decomposition():
    # lambda_1 lambda_2 = affine part + projection residual; the residual lies in S2 = V + W
    w = WeightSpec.constant(3)
    b = make_bundle(T3, w, "split")
    p = BaryPoly.monomial((0, 1, 1, 0))
    sol = solve_local_quadratic(T3, w, b, functional_data(T3, w, p, b.q, b.rho))
    lam1, lam2 = BaryPoly.coordinate(4, 1), BaryPoly.coordinate(4, 2)
    affine = BaryPoly.linear(sol.a)
    assert affine.allclose((lam1 + lam2) / 6 - BaryPoly.constant(4, 1 / 30), atol=1e-12)
    resid = p - (lam1 + lam2) / 6 + 1 / 30
    # xi and gamma are the expansion coefficients of the residual: xi = <resid, rho> (rho orthonormal, V perp W)
    xi = [w.expect_poly(resid * r) for r in b.rho]
    np.testing.assert_allclose(sol.xi, xi, atol=1e-12)
    quad = sum((g * f for g, f in zip(sol.gamma, b.psi)), BaryPoly(4))
    quad = sum((x * f for x, f in zip(sol.xi, b.rho)), quad)
    assert quad.allclose(resid, atol=1e-12)


def test_linear_solver():
    w = W1
    sol = solve_local_linear(T3, w, [2.5] * 4)
    np.testing.assert_allclose(sol.a, 2.5, atol=1e-12)
    p = BaryPoly.linear([1.0, -2.0, 0.3, 4.0])
    b = make_bundle(T3, w)
    data = functional_data(T3, w, p, b.q, b.rho)
    np.testing.assert_allclose(solve_local_linear(T3, w, data).a, [1.0, -2.0, 0.3, 4.0], atol=1e-10)
    # against the closed-form matrix with zero diagonal and entries 1/3
    A = (np.ones((4, 4)) - np.eye(4)) / 3
    np.testing.assert_allclose(A @ [1.0, -2.0, 0.3, 4.0], data[:4], atol=1e-12)


def test_affine_consistency(rng):
    w = WeightSpec.dirichlet([1.2, 2.0, 1.5, 3.0])
    K = Simplex(random_tet(rng))
    f = benchmark_function(4)
    bref, bK = make_bundle(T3, w), make_bundle(K, w)
    amap = affine_map_between(T3, K)
    dref = functional_data(T3, w, lambda x: f(amap(x)), bref.q, bref.rho)
    dK = functional_data(K, w, f, bK.q, bK.rho)
    np.testing.assert_allclose(dref, dK, rtol=1e-12, atol=1e-14)
    s1 = solve_local_quadratic(T3, w, bref, dref)
    s2 = solve_local_quadratic(K, w, bK, dK)
    lam = rng.dirichlet(np.ones(4), size=20)
    np.testing.assert_allclose(s1(lam), s2(lam), atol=1e-9)


def test_global_reproduction(rng):
    m = uniform_mesh(3)
    c = rng.normal(size=10)
    ref = ReferenceScheme(W1)
    assert global_error(m, W1, cartesian_quadratic(c), "quadratic", reference=ref) <= 1e-9
    c[4:] = 0
    assert global_error(m, W1, cartesian_quadratic(c), "linear", reference=ref) <= 1e-10
    with pytest.raises(ValueError):
        global_error(m, W1, cartesian_quadratic(c), "cubic", reference=ref)


def test_batched_matches_local(rng):
    ref = ReferenceScheme(W1)
    verts = np.stack([random_tet(rng) for _ in range(3)])
    f = benchmark_function(5)
    data = ref.data(verts, f)
    coeffs = ref.solve_quadratic(data)
    for k in range(3):
        s = Simplex(verts[k])
        b = ref.bundle
        d_local = functional_data(s, W1, f, b.q, b.rho)
        np.testing.assert_allclose(data[k], d_local, rtol=1e-11, atol=1e-13)
        sol = solve_local_quadratic(s, W1, b, d_local, system=ref.system)
        np.testing.assert_allclose(coeffs[k], np.concatenate([sol.a, sol.gamma, sol.xi]), atol=1e-10)


def test_test_functions_defined():
    p = np.array([[0.2, 0.4, 0.7], [1.0, 1.0, 1.0]])
    for fid in TEST_FUNCTIONS:
        v = benchmark_function(fid)(p)
        assert v.shape == (2,) and np.all(np.isfinite(v))
    assert benchmark_function(3)(np.zeros((1, 3)))[0] == pytest.approx(1 / 25)
    assert benchmark_function(7)(np.full((1, 3), 0.5))[0] == 0.0
    with pytest.raises(KeyError):
        benchmark_function(10)


def test_orders_formula():
    o = empirical_orders([0.4, 0.2, 0.1], [1.0, 0.125, 0.015625])
    assert np.isnan(o[0])
    np.testing.assert_allclose(o[1:], 3.0)


def test_convergence_rows_and_order():
    rows = convergence_study(3, W1, [3, 5])
    assert [(r["n"], r["scheme"]) for r in rows] == [(3, "linear"), (3, "quadratic"), (5, "linear"), (5, "quadratic")]
    lin = [r for r in rows if r["scheme"] == "linear"]
    o = np.log(lin[0]["error"] / lin[1]["error"]) / np.log(lin[0]["h"] / lin[1]["h"])
    assert lin[1]["order"] == pytest.approx(o)
    for n in (3, 5):
        e = {r["scheme"]: r["error"] for r in rows if r["n"] == n}
        assert e["quadratic"] < e["linear"]


@given(st.lists(st.floats(-2, 2), min_size=10, max_size=10))
def test_reproduction_property(c):
    ref = _REF
    verts = _VERTS
    f = cartesian_quadratic(np.array(c))
    coeffs = ref.solve_quadratic(ref.data(verts, f))
    assert np.sqrt(ref.squared_errors(verts, f, coeffs).sum()) <= 1e-9 * (1 + np.abs(c).max())


_REF = ReferenceScheme(WeightSpec.dirichlet([2.0, 1.0, 1.0, 3.0]))
_VERTS = uniform_mesh(2).element_vertices()
