"""Block moment system, unisolvence test and inf-sup stability constant.

Unknowns are ordered ``(xi; gamma)``: ``xi`` multiplies the interior
functions ``rho_k`` and ``gamma`` the face bubbles ``psi_i``.  Rows of ``H``
are the interior moments ``V_k`` followed by the face moments ``L_j``::

    H = [[G,      C],
         [Ctilde, M]]

    G[k, l]      = <rho_l, rho_k>            C[k, i] = <psi_i, rho_k>
    Ctilde[j, l] = <rho_l|F_j, q_j>_j        M[j, i] = <psi_i|F_j, q_j>_j
    A[j, i]      = <lambda_i|F_j, 1>_j
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .barypoly import BaryPoly, restrict_to_face
from .bases import BasisBundle
from .geometry import Simplex
from .linalg import inv_sqrt_spd, sym_eig, cond2
from .moments import WeightSpec

DET_RTOL = 1e-10
SYM_RTOL = 1e-9


class UnisolvenceError(np.linalg.LinAlgError):
    """The moment functionals do not determine a unique polynomial."""


class FaceFunctionalError(UnisolvenceError):
    """The face matrix M is singular."""


@dataclass(frozen=True, eq=False)
class MomentSystem:
    bundle: BasisBundle
    A: np.ndarray
    G: np.ndarray
    C: np.ndarray
    Ctilde: np.ndarray
    M: np.ndarray
    iface_quad: np.ndarray
    trial_gram: np.ndarray

    @property
    def H(self) -> np.ndarray:
        return np.block([[self.G, self.C], [self.Ctilde, self.M]])

    @property
    def d(self) -> int:
        return self.A.shape[0] - 1

    @property
    def dtilde(self) -> int:
        return self.G.shape[0]


@dataclass
class StabilityReport:
    detA: float = np.nan
    detT: float = np.nan
    detH: float = np.nan
    detG: float = np.nan
    unisolvent: bool = False
    diagnosis: str = ""
    T: np.ndarray | None = None
    K11: np.ndarray | None = None
    K12: np.ndarray | None = None
    K21: np.ndarray | None = None
    K22: np.ndarray | None = None
    S: np.ndarray | None = None
    Shat: np.ndarray | None = None
    beta: float = np.nan
    kappaH: float = np.nan
    scaled: "ScaledSystem | None" = None


@dataclass(frozen=True, eq=False)
class ScaledSystem:
    theta: np.ndarray
    upsilon: np.ndarray
    Htilde: np.ndarray
    kappa: float
    system: MomentSystem = field(repr=False)


def assemble(s: Simplex, w: WeightSpec, bundle: BasisBundle) -> MomentSystem:
    """All blocks from exact closed-form moments."""
    if s.dim != w.dim or bundle.d != s.dim:
        raise ValueError("simplex, weight and bundle dimensions disagree")
    d = s.dim
    n = d + 1
    rho, psi, q = list(bundle.rho), list(bundle.psi), list(bundle.q)
    ip = lambda a, b: w.expect_poly(a * b)
    faces = [w.face(j) for j in range(n)]
    G = np.array([[ip(rho[l], rho[k]) for l in range(len(rho))] for k in range(len(rho))])
    G = G.reshape(len(rho), len(rho))
    C = np.array([[ip(psi[i], rho[k]) for i in range(n)] for k in range(len(rho))]).reshape(len(rho), n)
    Ct = np.array([[faces[j].expect_poly(restrict_to_face(rho[l], j) * q[j]) for l in range(len(rho))]
                   for j in range(n)]).reshape(n, len(rho))
    M = np.array([[faces[j].expect_poly(restrict_to_face(psi[i], j) * q[j]) for i in range(n)]
                  for j in range(n)])
    A = np.array([[faces[j].expect_poly(restrict_to_face(BaryPoly.coordinate(n, i), j))
                   for i in range(n)] for j in range(n)])
    trial = rho + psi
    iface = np.array([[faces[j].expect_poly(restrict_to_face(p, j)) for p in trial] for j in range(n)])
    trial_gram = np.array([[ip(a, b) for b in trial] for a in trial])
    return MomentSystem(bundle, A, G, C, Ct, M, iface, trial_gram)


def det_tolerance(a: np.ndarray) -> float:
    """Scale-relative determinant threshold ``1e-10 * (geometric mean of row norms)^n``."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if n == 0:
        return 0.0
    norms = np.linalg.norm(a, axis=1)
    if np.any(norms == 0.0):
        return np.inf
    return DET_RTOL * float(np.exp(np.log(norms).sum()))


def _det(a: np.ndarray) -> float:
    return float(np.linalg.det(a)) if a.size else 1.0


def _is_spd(a: np.ndarray) -> bool:
    if a.size == 0:
        return True
    ev = sym_eig(a)[0]
    return bool(ev[0] > 1e-12 * max(abs(ev[-1]), 1e-300))


def unisolvence(sys: MomentSystem) -> StabilityReport:
    """Determinants of ``A`` and of the Schur complement ``T = M - Ctilde G^-1 C``.

    A trial family whose Gram matrix is not positive definite (dependent
    ``rho``/``psi`` functions) is reported as not unisolvent with the
    diagnosis ``"G not SPD"``.
    """
    rep = StabilityReport()
    rep.detA = _det(sys.A)
    if not (_is_spd(sys.G) and _is_spd(sys.trial_gram)):
        rep.diagnosis = "G not SPD"
        rep.unisolvent = False
        return rep
    G = sys.G
    T = sys.M - sys.Ctilde @ np.linalg.solve(G, sys.C) if G.size else sys.M.copy()
    rep.T = T
    rep.detG = _det(G)
    rep.detT = _det(T)
    rep.detH = _det(sys.H)
    okA = abs(rep.detA) > det_tolerance(sys.A)
    okT = abs(rep.detT) > det_tolerance(T)
    okH = abs(rep.detH) > det_tolerance(sys.H)
    rep.unisolvent = bool(okA and okT and okH)
    if not okA:
        rep.diagnosis = "A singular"
    elif not okT:
        rep.diagnosis = "Schur complement singular"
    elif not okH:
        rep.diagnosis = "H singular"
    return rep


def k_blocks(G, C, Ctilde, M):
    MtM = M.T @ M
    K11 = Ctilde.T @ MtM @ Ctilde + G @ G @ G
    K12 = Ctilde.T @ MtM @ M + G @ G @ C
    K21 = K12.T
    K22 = M.T @ MtM @ M + C.T @ G @ C
    return K11, K12, K21, K22


def _symmetrize(a: np.ndarray, what: str) -> np.ndarray:
    defect = np.linalg.norm(a - a.T)
    if defect > SYM_RTOL * max(np.linalg.norm(a), 1e-300):
        raise np.linalg.LinAlgError(f"{what} has symmetry defect {defect:.3e}")
    return 0.5 * (a + a.T)


def _stability_blocks(G, C, Ctilde, M, rep: StabilityReport) -> StabilityReport:
    if abs(_det(M)) <= det_tolerance(M):
        raise FaceFunctionalError("face functionals dependent: M is singular")
    K11, K12, K21, K22 = k_blocks(G, C, Ctilde, M)
    S = K11 - K12 @ np.linalg.solve(K22, K21)
    S = _symmetrize(S, "S")
    Gm = inv_sqrt_spd(G)
    Shat = _symmetrize(Gm @ S @ Gm, "Shat")
    smin = sym_eig(Shat)[0][0] if Shat.size else np.inf
    rep.K11, rep.K12, rep.K21, rep.K22 = K11, K12, K21, K22
    rep.S, rep.Shat = S, Shat
    rep.beta = float(np.sqrt(max(smin, 0.0)))
    rep.kappaH = cond2(np.block([[G, C], [Ctilde, M]]))
    return rep


def stability(sys: MomentSystem) -> StabilityReport:
    """Unisolvence data plus ``S``, ``Shat`` and ``beta = sqrt(sigma_min(Shat))``."""
    rep = unisolvence(sys)
    if rep.diagnosis == "G not SPD":
        raise UnisolvenceError("G not SPD: trial functions are dependent")
    return _stability_blocks(sys.G, sys.C, sys.Ctilde, sys.M, rep)


def regularized_beta(sys: MomentSystem, alpha_reg: float, report: StabilityReport | None = None) -> float:
    """``sqrt(sigma_min(G^-1/2 (S + alpha_reg I) G^-1/2))``; ``alpha_reg = 0`` gives ``beta``."""
    if not alpha_reg >= 0.0:
        raise ValueError("alpha_reg must be non-negative")
    rep = stability(sys) if report is None else report
    Gm = inv_sqrt_spd(sys.G)
    Sr = Gm @ (rep.S + alpha_reg * np.eye(rep.S.shape[0])) @ Gm
    Sr = 0.5 * (Sr + Sr.T)
    return float(np.sqrt(max(sym_eig(Sr)[0][0], 0.0)))


def scale(sys: MomentSystem, theta, upsilon) -> ScaledSystem:
    """Scaled moments ``Vt_k = upsilon_k V_k``, ``Lt_j = theta_j L_j``.

    ``Htilde = diag(upsilon, theta) @ H`` and ``kappa = cond2(Htilde)``.  The
    attached ``system`` applies the same rescaling consistently to trial and
    test sides (``rho -> upsilon rho``, ``q -> theta q``), which is the form
    used for the stability constant.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    upsilon = np.asarray(upsilon, dtype=float).ravel()
    if theta.shape != (sys.d + 1,) or upsilon.shape != (sys.dtilde,):
        raise ValueError("scale vectors have the wrong length")
    if np.any(theta <= 0) or np.any(upsilon <= 0) or not (np.all(np.isfinite(theta)) and np.all(np.isfinite(upsilon))):
        raise ValueError("scales must be positive and finite")
    D = np.concatenate([upsilon, theta])
    Ht = D[:, None] * sys.H
    Dv, Dl = upsilon, theta
    rebased = MomentSystem(
        bundle=sys.bundle,
        A=sys.A,
        G=Dv[:, None] * sys.G * Dv[None, :],
        C=Dv[:, None] * sys.C,
        Ctilde=Dl[:, None] * sys.Ctilde * Dv[None, :],
        M=Dl[:, None] * sys.M,
        iface_quad=np.hstack([sys.iface_quad[:, :sys.dtilde] * Dv[None, :], sys.iface_quad[:, sys.dtilde:]]),
        trial_gram=sys.trial_gram,
    )
    return ScaledSystem(theta, upsilon, Ht, cond2(Ht), rebased)


def scaled_stability(sys: MomentSystem, theta, upsilon) -> StabilityReport:
    sc = scale(sys, theta, upsilon)
    rep = stability(sc.system)
    rep.scaled = sc
    return rep
