"""Local linear and enriched quadratic histopolation on tetrahedral meshes.

Everything is set up once on the reference simplex.  Densities, bases and
quadrature live in barycentric coordinates, so the same functional weights,
system matrices and factorizations serve every element of a mesh.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial, log
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .bases import BasisBundle, make_bundle
from .barypoly import BaryPoly, restrict_to_face
from .geometry import Simplex, reference_simplex
from .mesh import TetMesh, quasi_uniform_mesh, uniform_mesh
from .moments import IntegrabilityError, WeightSpec, barycentric_rule, face_rule
from .momentsystem import MomentSystem, UnisolvenceError, assemble, unisolvence

SCHEMES = ("linear", "quadratic")
_CHUNK = 8192


# test functions ---------------------------------------------------------------

def _r(x, y, z):
    return np.sqrt((x - 0.5) ** 2 + (y - 0.5) ** 2 + (z - 0.5) ** 2)


TEST_FUNCTIONS: dict[int, Callable] = {
    1: lambda x, y, z: np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y) * np.sin(2 * np.pi * z),
    2: lambda x, y, z: np.sin(2 * np.pi * x * y * z),
    3: lambda x, y, z: 1.0 / (x ** 2 + y ** 2 + z ** 2 + 25.0),
    4: lambda x, y, z: np.exp(x ** 2 + y ** 2 + z ** 2),
    5: lambda x, y, z: np.sin(x) * np.cos(y) * np.exp(-z ** 2),
    6: lambda x, y, z: np.log(x ** 3 * y ** 3 * z ** 3 + 0.25),
    7: _r,
    8: lambda x, y, z: np.sin(10 * _r(x, y, z)) * np.exp(-_r(x, y, z)),
    9: lambda x, y, z: np.sin(2 * np.pi * x * y * z) * np.exp(x ** 2 + y ** 2 + z ** 2),
}


def benchmark_function(fid: int) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized ``f(points[..., 3]) -> values[...]`` for ``fid`` in 1..9."""
    if fid not in TEST_FUNCTIONS:
        raise KeyError(f"unknown test function {fid}; choose 1..9")
    g = TEST_FUNCTIONS[fid]
    return lambda p: g(p[..., 0], p[..., 1], p[..., 2])


# local solutions --------------------------------------------------------------

@dataclass
class LocalSolution:
    """``p = sum a_i lambda_i + sum gamma_j psi_j + sum xi_k rho_k``."""

    element: int
    a: np.ndarray
    gamma: np.ndarray
    xi: np.ndarray
    bundle: BasisBundle | None = None

    def as_poly(self) -> BaryPoly:
        p = BaryPoly.linear(self.a)
        if self.bundle is not None:
            for g, f in zip(self.gamma, self.bundle.psi):
                p = p + float(g) * f
            for x, f in zip(self.xi, self.bundle.rho):
                p = p + float(x) * f
        elif np.any(self.gamma) or np.any(self.xi):
            raise ValueError("quadratic part needs the basis bundle")
        return p

    def __call__(self, lam):
        return self.as_poly()(lam)


def _split_data(data, d: int, dt: int):
    data = np.asarray(data, dtype=float)
    n = d + 1
    if data.shape[-1] != 2 * n + dt:
        raise ValueError(f"data vector must have {2 * n + dt} entries")
    return data[..., :n], data[..., n:2 * n], data[..., 2 * n:]


def solve_local_quadratic(s: Simplex, w: WeightSpec, bundle: BasisBundle, data,
                          system: MomentSystem | None = None, element: int = 0) -> LocalSolution:
    """Two-stage solve: ``H (xi; gamma) = (V; L)``, then ``A a = I - Iq (xi; gamma)``."""
    sys = assemble(s, w, bundle) if system is None else system
    rep = unisolvence(sys)
    if not rep.unisolvent:
        raise UnisolvenceError(f"moment system is not unisolvent ({rep.diagnosis})")
    d, dt = sys.d, sys.dtilde
    I, L, V = _split_data(data, d, dt)
    xg = np.linalg.solve(sys.H, np.concatenate([V, L]))
    a = np.linalg.solve(sys.A, I - sys.iface_quad @ xg)
    return LocalSolution(element, a, xg[dt:], xg[:dt], bundle)


def solve_local_linear(s: Simplex, w: WeightSpec, data, element: int = 0) -> LocalSolution:
    """Affine ``p`` with ``I_j(p) = I_j(f)``; ``data`` holds the face averages."""
    d = s.dim
    faces = [w.face(j) for j in range(d + 1)]
    A = np.array([[faces[j].expect_poly(restrict_to_face(BaryPoly.coordinate(d + 1, i), j))
                   for i in range(d + 1)] for j in range(d + 1)])
    I = np.asarray(data, dtype=float)[: d + 1]
    try:
        a = np.linalg.solve(A, I)
    except np.linalg.LinAlgError as exc:
        raise UnisolvenceError("face-average matrix A is singular") from exc
    return LocalSolution(element, a, np.zeros(0), np.zeros(0))


# reference scheme ----------------------------------------------------------------

class ReferenceScheme:
    """Functional weights, basis values and factorizations on the reference simplex.

    Parameters
    ----------
    weight : WeightSpec
        Density in barycentric form; pulled back unchanged to every element.
    config : str
        Basis configuration passed to :func:`make_bundle`.
    npts_data, npts_err : int
        Gauss points per axis for the data functionals and for L2 errors.
    """

    def __init__(self, weight: WeightSpec, config: str = "split", shift: int = 0,
                 npts_data: int = 5, npts_err: int = 6, bundle: BasisBundle | None = None):
        self.weight = weight
        d = weight.dim
        self.d = d
        ref = reference_simplex(d)
        self.bundle = make_bundle(ref, weight, config, shift=shift) if bundle is None else bundle
        self.system = assemble(ref, weight, self.bundle)
        rep = unisolvence(self.system)
        if not rep.unisolvent:
            raise UnisolvenceError(f"reference moment system is not unisolvent ({rep.diagnosis})")
        self.report = rep
        self.dt = self.system.dtilde
        self._lu_H = lu_factor(self.system.H)
        self._lu_A = lu_factor(self.system.A)
        self._build_data_operator(npts_data)
        self._build_error_rule(npts_err)

    def _build_data_operator(self, npts: int):
        d, n = self.d, self.d + 1
        w, b = self.weight, self.bundle
        pts = []
        offset = 0
        rows_I, rows_L = [], []
        for j in range(n):
            lam, wt = face_rule(d, j, npts)
            mu = np.delete(lam, j, axis=1)
            dens = wt * w.face(j).reference_density(mu)
            pts.append(lam)
            rows_I.append((offset, dens))
            rows_L.append((offset, dens * b.q[j](mu)))
            offset += len(lam)
        lam, wt = barycentric_rule(d, npts)
        dens = wt * w.reference_density(lam)
        pts.append(lam)
        vol_off = offset
        offset += len(lam)
        phi = np.zeros((2 * n + self.dt, offset))
        for j, (o, r) in enumerate(rows_I):
            phi[j, o:o + len(r)] = r
        for j, (o, r) in enumerate(rows_L):
            phi[n + j, o:o + len(r)] = r
        for k, rho in enumerate(b.rho):
            phi[2 * n + k, vol_off:] = dens * rho(lam)
        self.data_points = np.vstack(pts)
        self.data_operator = phi

    def _build_error_rule(self, npts: int):
        lam, wt = barycentric_rule(self.d, npts)
        n = self.d + 1
        cols = [lam[:, i] for i in range(n)]
        cols += [r(lam) for r in self.bundle.psi]
        cols += [r(lam) for r in self.bundle.rho]
        self.err_points = lam
        self.err_weights = wt
        self.err_basis = np.stack(cols, axis=1)

    # batched operations ----------------------------------------------------
    def data(self, elem_vertices: np.ndarray, f) -> np.ndarray:
        """``(m, 2(d+1)+dt)`` functional data for ``m`` elements."""
        if self.weight.has_singular_density():
            raise IntegrabilityError("singular Dirichlet density: quadrature of general data refused")
        x = np.einsum("pi,mic->mpc", self.data_points, elem_vertices)
        return f(x) @ self.data_operator.T

    def solve_quadratic(self, data: np.ndarray) -> np.ndarray:
        """Coefficients ``(a, gamma, xi)`` per row of ``data``."""
        n, dt = self.d + 1, self.dt
        I, L, V = _split_data(data, self.d, dt)
        xg = lu_solve(self._lu_H, np.vstack([V.T, L.T]))
        a = lu_solve(self._lu_A, I.T - self.system.iface_quad @ xg)
        return np.vstack([a, xg[dt:], xg[:dt]]).T

    def solve_linear(self, data: np.ndarray) -> np.ndarray:
        n, dt = self.d + 1, self.dt
        a = lu_solve(self._lu_A, np.asarray(data)[:, :n].T).T
        return np.hstack([a, np.zeros((a.shape[0], n + dt))])

    def squared_errors(self, elem_vertices: np.ndarray, f, coeffs: np.ndarray) -> np.ndarray:
        """``int_K (f - p_K)^2`` per element."""
        x = np.einsum("pi,mic->mpc", self.err_points, elem_vertices)
        p = coeffs @ self.err_basis.T
        vol = _volumes(elem_vertices)
        return vol * (((f(x) - p) ** 2) @ self.err_weights)


def _volumes(elem_vertices: np.ndarray) -> np.ndarray:
    d = elem_vertices.shape[1] - 1
    e = elem_vertices[:, 1:] - elem_vertices[:, :1]
    return np.abs(np.linalg.det(e)) / factorial(d)


def global_error(mesh: TetMesh, w: WeightSpec, f, scheme: str, quad_order: int = 6,
                 data_order: int = 5, reference: ReferenceScheme | None = None) -> float:
    """``sqrt(sum_K int_K (f - p_K)^2)`` for the piecewise local histopolant."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    ref = ReferenceScheme(w, npts_data=data_order, npts_err=quad_order) if reference is None else reference
    ev = mesh.element_vertices()
    total = 0.0
    for start in range(0, len(ev), _CHUNK):
        chunk = ev[start:start + _CHUNK]
        data = ref.data(chunk, f)
        coeffs = ref.solve_quadratic(data) if scheme == "quadratic" else ref.solve_linear(data)
        sq = ref.squared_errors(chunk, f, coeffs)
        if not np.all(np.isfinite(sq)):
            bad = start + int(np.flatnonzero(~np.isfinite(sq))[0])
            raise FloatingPointError(f"non-finite error on element {bad}")
        total += float(sq.sum())
    return float(np.sqrt(total))


def empirical_orders(h: Sequence[float], err: Sequence[float]) -> list[float]:
    """``log(e_i / e_{i+1}) / log(h_i / h_{i+1})``; NaN for the first level."""
    out = [float("nan")]
    for i in range(len(h) - 1):
        out.append(log(err[i] / err[i + 1]) / log(h[i] / h[i + 1]))
    return out


def convergence_study(f_id: int, weight: WeightSpec, n_list: Sequence[int],
                      scheme_list: Sequence[str] = SCHEMES, mesh_kind: str = "uniform",
                      delta: float = 0.2, seed: int = 0, quad_order: int = 6,
                      data_order: int = 5) -> list[dict]:
    """Rows ``{n, h, scheme, weight, error, order}`` ordered by ``(n, scheme)``."""
    f = benchmark_function(f_id) if isinstance(f_id, int) else f_id
    ref = ReferenceScheme(weight, npts_data=data_order, npts_err=quad_order)
    levels = []
    for n in n_list:
        if mesh_kind == "uniform":
            mesh = uniform_mesh(n)
        elif mesh_kind == "quasi":
            mesh = quasi_uniform_mesh(n, delta, seed)
        else:
            raise ValueError(f"unknown mesh kind {mesh_kind!r}")
        errs = {sch: global_error(mesh, weight, f, sch, reference=ref) for sch in scheme_list}
        levels.append((n, mesh.h, errs))
    rows = []
    orders = {sch: empirical_orders([lv[1] for lv in levels], [lv[2][sch] for lv in levels])
              for sch in scheme_list}
    for i, (n, h, errs) in enumerate(levels):
        for sch in sorted(scheme_list):
            rows.append({"n": n, "h": h, "scheme": sch, "weight": str(weight),
                         "error": errs[sch], "order": orders[sch][i]})
    return rows
