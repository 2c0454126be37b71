"""Quadratic trial and test families for enriched histopolation.

Terminology used throughout:

* ``psi``: face bubbles spanning W, ``psi_j = (I - P1)(g_j)`` with
  ``g_j = lambda_{j+s} lambda_{j+s+1}`` (cyclic indices, ``s`` = ``shift``).
* ``rho``: interior functions spanning V, with ``S2 = V (+) W``.
* ``q``: face test polynomials, ``q_j`` orthogonal to affine functions on face ``j``.

``P1`` always denotes the weighted L2 projection onto affine functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .barypoly import BaryPoly, restrict_to_face
from .geometry import Simplex
from .moments import WeightSpec, WeightKind


class ConstructionError(ValueError):
    """A basis construction hit a degenerate configuration."""


def _inner(w: WeightSpec) -> Callable[[BaryPoly, BaryPoly], float]:
    return lambda p, q: w.expect_poly(p * q)


def _coords(n: int) -> list[BaryPoly]:
    return [BaryPoly.coordinate(n, i) for i in range(n)]


def p1_projection(w: WeightSpec, p: BaryPoly) -> BaryPoly:
    """Weighted L2 projection of ``p`` onto ``span{lambda_i}`` (any dimension)."""
    n = w.nvars
    lam = _coords(n)
    ip = _inner(w)
    gram = np.array([[ip(a, b) for b in lam] for a in lam])
    rhs = np.array([ip(p, a) for a in lam])
    try:
        c = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise ConstructionError("affine Gram matrix is singular") from exc
    return BaryPoly.linear(c)


def project_p1_volume(s: Simplex, w: WeightSpec, p: BaryPoly) -> BaryPoly:
    _check(s, w)
    return p1_projection(w, p)


def project_p1_face(s: Simplex, w: WeightSpec, j: int, p: BaryPoly) -> BaryPoly:
    _check(s, w)
    return p1_projection(w.face(j), p)


def p1_residual(w: WeightSpec, p: BaryPoly) -> BaryPoly:
    """``(I - P1)(p)``."""
    return p - p1_projection(w, p)


def _check(s: Simplex, w: WeightSpec):
    if s.dim != w.dim:
        raise ValueError(f"weight is {w.dim}-dimensional but simplex is {s.dim}-dimensional")


# face bubbles ---------------------------------------------------------------

def bubble_pair(d: int, j: int, shift: int = 0) -> tuple[int, int]:
    n = d + 1
    return ((j + shift) % n, (j + shift + 1) % n)


def bubbles(d: int, shift: int = 0) -> list[BaryPoly]:
    """``g_j = lambda_a lambda_b`` with ``(a, b) = bubble_pair(d, j, shift)``."""
    n = d + 1
    out = []
    for j in range(n):
        a, b = bubble_pair(d, j, shift)
        e = [0] * n
        e[a] += 1
        e[b] += 1
        out.append(BaryPoly.monomial(e))
    return out


def build_psi(s: Simplex, w: WeightSpec, shift: int = 0) -> list[BaryPoly]:
    _check(s, w)
    if s.dim < 2:
        raise ConstructionError("face bubbles need d >= 2")
    psi = [p1_residual(w, g) for g in bubbles(s.dim, shift)]
    gram = _gram(w, psi)
    scale = np.sqrt(np.outer(np.diag(gram), np.diag(gram)))
    if np.linalg.det(gram / scale) <= 1e-12:
        raise ConstructionError("face bubbles are linearly dependent")
    return psi


def supported_on_face(d: int, j: int, ell: int, shift: int = 0) -> bool:
    """True when ``g_ell`` does not vanish identically on face ``j``."""
    return j not in bubble_pair(d, ell, shift)


def default_lstar(d: int, j: int, shift: int = 0) -> int:
    """Bubble index carrying the nonzero entry in row ``j`` of M.

    ``j + 2`` (for ``shift = 0``) when that bubble lives on face ``j``;
    otherwise the next admissible index going down.
    """
    n = d + 1
    for off in (2, 1, 0):
        ell = (j + off - shift) % n
        if supported_on_face(d, j, ell, shift):
            return ell
    raise ConstructionError(f"no bubble is supported on face {j}")


# interior functions -----------------------------------------------------------

def vertex_pairs(d: int) -> list[tuple[int, int]]:
    return list(combinations(range(d + 1), 2))


def build_rho_dirichlet(s: Simplex, alpha: Sequence[float]) -> list[BaryPoly]:
    """Closed-form basis ``rho_jl = l_j l_l - k_l l_j - k_j l_l + h_jl`` of S2 for a Dirichlet weight."""
    alpha = np.asarray(alpha, dtype=float)
    d = len(alpha) - 1
    if s.dim != d:
        raise ValueError("alpha length does not match the simplex")
    S = alpha.sum()
    n = d + 1
    out = []
    for j, l in vertex_pairs(d):
        e = [0] * n
        e[j] += 1
        e[l] += 1
        p = BaryPoly.monomial(e)
        p = p - BaryPoly.coordinate(n, j, alpha[l] / (S + 2)) - BaryPoly.coordinate(n, l, alpha[j] / (S + 2))
        p = p + alpha[j] * alpha[l] / ((S + 1) * (S + 2))
        out.append(p)
    return out


def s2_basis(w: WeightSpec) -> list[BaryPoly]:
    """Basis ``(I - P1)(lambda_j lambda_l)``, ``j < l``, of S2 for weight ``w``.

    Uses the closed form for Dirichlet/constant weights.
    """
    d = w.dim
    if w.kind in (WeightKind.DIRICHLET, WeightKind.CONSTANT):
        n = d + 1
        S = sum(w.alpha)
        out = []
        for j, l in vertex_pairs(d):
            aj, al = w.alpha[j], w.alpha[l]
            e = [0] * n
            e[j] += 1
            e[l] += 1
            p = BaryPoly.monomial(e) - BaryPoly.coordinate(n, j, al / (S + 2)) \
                - BaryPoly.coordinate(n, l, aj / (S + 2)) + aj * al / ((S + 1) * (S + 2))
            out.append(p)
        return out
    out = []
    for j, l in vertex_pairs(d):
        e = [0] * (d + 1)
        e[j] += 1
        e[l] += 1
        out.append(p1_residual(w, BaryPoly.monomial(e)))
    return out


def gram_schmidt(polys: Sequence[BaryPoly], inner: Callable, against: Sequence[BaryPoly] = (),
                 rtol: float = 1e-6) -> list[BaryPoly]:
    """Modified Gram-Schmidt of ``polys`` after removing ``against`` components.

    ``against`` must already be orthonormal.  Vectors whose residual norm drops
    below ``rtol`` times their original norm are discarded as dependent.  The
    threshold is loose because squared norms from expanded moments carry
    cancellation error of order machine epsilon.
    """
    basis = list(against)
    out = []
    for p in polys:
        n0 = np.sqrt(max(inner(p, p), 0.0))
        if n0 == 0.0:
            continue
        r = p
        for _ in range(2):
            for b in basis:
                r = r - inner(r, b) * b
        nr = np.sqrt(max(inner(r, r), 0.0))
        if nr <= rtol * n0:
            continue
        r = r / nr
        basis.append(r)
        out.append(r)
    return out


def split_V_W(s: Simplex, w: WeightSpec, psi: Sequence[BaryPoly]) -> list[BaryPoly]:
    """Orthonormal basis of the complement V of ``span(psi)`` in S2."""
    _check(s, w)
    d = s.dim
    dt = (d - 2) * (d + 1) // 2
    ip = _inner(w)
    w_basis = gram_schmidt(psi, ip)
    if len(w_basis) != len(psi):
        raise ConstructionError("face space basis is rank deficient")
    rho = gram_schmidt(s2_basis(w), ip, against=w_basis)
    if len(rho) != dt:
        raise ConstructionError(f"interior space has dimension {len(rho)}, expected {dt}")
    return rho


def build_rho_optimal(s: Simplex, w: WeightSpec, generators: Sequence[BaryPoly]) -> list[BaryPoly]:
    """Unit-norm projections ``(I - P1)(p) / ||(I - P1)(p)||``."""
    _check(s, w)
    out = []
    for p in generators:
        r = p1_residual(w, p)
        nr = np.sqrt(max(w.expect_poly(r * r), 0.0))
        if nr <= 1e-12:
            raise ConstructionError("generator projects to zero in S2")
        out.append(r / nr)
    return out


def interior_generators(d: int, shift: int = 0) -> list[BaryPoly]:
    """Products ``lambda_j lambda_l`` over the vertex pairs not used by any bubble."""
    used = {tuple(sorted(bubble_pair(d, j, shift))) for j in range(d + 1)}
    out = []
    for j, l in vertex_pairs(d):
        if (j, l) in used:
            continue
        e = [0] * (d + 1)
        e[j] += 1
        e[l] += 1
        out.append(BaryPoly.monomial(e))
    return out


def build_rho_raw(s: Simplex, w: WeightSpec, shift: int = 0) -> list[BaryPoly]:
    """Unnormalized ``(I - P1)(lambda_j lambda_l)`` for the non-bubble pairs."""
    _check(s, w)
    return [p1_residual(w, p) for p in interior_generators(s.dim, shift)]


# face test polynomials --------------------------------------------------------

def face_s2_orthonormal(w_face: WeightSpec) -> list[BaryPoly]:
    """Orthonormal basis of S2 on a face, from the closed-form face basis."""
    return gram_schmidt(s2_basis(w_face), _inner(w_face))


def build_q_default(s: Simplex, w: WeightSpec, j: int, shift: int = 0,
                    lstar: int | None = None) -> BaryPoly:
    """Face test polynomial in S2(F_j) annihilating every admissible bubble except ``lstar``.

    Among the kernel, the direction closest to ``g_lstar|F_j`` is taken;
    normalized to unit face norm with ``<g_lstar|F_j, q> > 0``.
    """
    _check(s, w)
    d = s.dim
    if d < 2:
        raise ConstructionError("face tests need d >= 2")
    lstar = default_lstar(d, j, shift) if lstar is None else lstar
    if not supported_on_face(d, j, lstar, shift):
        raise ConstructionError(f"bubble {lstar} vanishes on face {j}")
    wf = w.face(j)
    ip = _inner(wf)
    tau = face_s2_orthonormal(wf)
    g = bubbles(d, shift)
    coeff = lambda p: np.array([ip(p, t) for t in tau])
    others = [ell for ell in range(d + 1) if ell != lstar and supported_on_face(d, j, ell, shift)]
    target = coeff(restrict_to_face(g[lstar], j))
    if others:
        K = np.array([coeff(restrict_to_face(g[ell], j)) for ell in others])
        zeta = target - K.T @ np.linalg.lstsq(K @ K.T, K @ target, rcond=None)[0]
    else:
        zeta = target
    nz = np.linalg.norm(zeta)
    if nz <= 1e-12 * max(np.linalg.norm(target), 1e-300):
        raise ConstructionError(f"empty kernel for the face test on face {j}")
    zeta = zeta / nz
    return sum((c * t for c, t in zip(zeta, tau)), BaryPoly(d))


def build_q_optimal(s: Simplex, w: WeightSpec, j: int, psi: Sequence[BaryPoly],
                    i_of_j: int | None = None, shift: int = 0) -> BaryPoly:
    """``(I - P1)(psi_i|F_j)`` normalized: maximizes ``|<psi_i|F_j, q>|`` over unit ``q``."""
    _check(s, w)
    i = default_lstar(s.dim, j, shift) if i_of_j is None else i_of_j
    wf = w.face(j)
    r = p1_residual(wf, restrict_to_face(psi[i], j))
    nr = np.sqrt(max(wf.expect_poly(r * r), 0.0))
    if nr <= 1e-12:
        raise ConstructionError(f"psi_{i} is face-degenerate on face {j}")
    return r / nr


# bundles ------------------------------------------------------------------------

@dataclass(frozen=True)
class BasisBundle:
    """Trial/test families on one simplex.

    Column order used by the moment system is ``(rho..., psi...)``.
    """

    weight: WeightSpec
    simplex: Simplex
    psi: tuple
    rho: tuple
    q: tuple
    orthonormal_rho: bool = False
    v_perp_w: bool = False
    m_normalized: bool = False
    shift: int = 0
    label: str = "custom"
    notes: dict = field(default_factory=dict, compare=False)

    @property
    def d(self) -> int:
        return self.simplex.dim

    @property
    def dtilde(self) -> int:
        return len(self.rho)


def face_matrix(w: WeightSpec, psi: Sequence[BaryPoly], q: Sequence[BaryPoly]) -> np.ndarray:
    """``M[j, i] = <psi_i|F_j, q_j>_{omega_j}``."""
    n = len(q)
    return np.array([[w.face(j).expect_poly(restrict_to_face(psi[i], j) * q[j])
                      for i in range(len(psi))] for j in range(n)])


def normalize_m(bundle: BasisBundle) -> BasisBundle:
    """Change basis in W so that the face block becomes the identity."""
    M = face_matrix(bundle.weight, bundle.psi, bundle.q)
    try:
        Minv = np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise ConstructionError("face functionals are dependent on W; M is singular") from exc
    n = len(bundle.psi)
    psi = tuple(sum((Minv[k, i] * bundle.psi[k] for k in range(n)), BaryPoly(n))
                for i in range(n))
    return replace(bundle, psi=psi, m_normalized=True)


CONFIGS = ("canonical", "split", "raw")


def make_bundle(s: Simplex, w: WeightSpec, config: str = "split", shift: int = 0,
                face_test: str = "default") -> BasisBundle:
    """Assemble a standard configuration.

    ``canonical``
        orthonormal V perpendicular to W, and M normalized to the identity.
    ``split``
        orthonormal V perpendicular to W, bubbles left as constructed.
    ``raw``
        interior functions from the vertex pairs not used by bubbles, no
        orthogonalization (G != I and C != 0 in general).
    """
    if config not in CONFIGS:
        raise ValueError(f"unknown basis configuration {config!r}")
    psi = build_psi(s, w, shift)
    if face_test == "default":
        q = [build_q_default(s, w, j, shift) for j in range(s.dim + 1)]
    elif face_test == "optimal":
        q = [build_q_optimal(s, w, j, psi, shift=shift) for j in range(s.dim + 1)]
    else:
        raise ValueError(f"unknown face test choice {face_test!r}")
    if config == "raw":
        rho = build_rho_raw(s, w, shift)
        bundle = BasisBundle(w, s, tuple(psi), tuple(rho), tuple(q), shift=shift, label="raw")
    else:
        rho = split_V_W(s, w, psi)
        bundle = BasisBundle(w, s, tuple(psi), tuple(rho), tuple(q), orthonormal_rho=True,
                             v_perp_w=True, shift=shift, label=config)
    if config == "canonical":
        bundle = normalize_m(bundle)
    return bundle


def _gram(w: WeightSpec, polys: Sequence[BaryPoly]) -> np.ndarray:
    ip = _inner(w)
    return np.array([[ip(a, b) for b in polys] for a in polys])


def gram(w: WeightSpec, polys: Sequence[BaryPoly]) -> np.ndarray:
    return _gram(w, polys)
