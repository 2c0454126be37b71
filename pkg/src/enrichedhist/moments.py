"""Weighted moments on simplices.

Closed forms come from the Dirichlet/Gamma moment identity

    (1/|S|) * int_S prod_i lambda_i^a_i dx = d! prod_i Gamma(a_i + 1) / Gamma(d + 1 + sum_i a_i),

which covers the constant, affine and Dirichlet weight families and their
face traces.  Numerical quadrature (collapsed Gauss-Jacobi) handles general
integrands.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from math import factorial, lgamma, exp
from typing import Sequence

import numpy as np
from scipy.special import roots_jacobi

from .barypoly import BaryPoly, embed_face_point, restrict_to_face
from .geometry import Simplex


class IntegrabilityError(ValueError):
    """A moment integral diverges (some exponent <= -1)."""


class WeightKind(str, Enum):
    CONSTANT = "constant"
    AFFINE = "affine"
    DIRICHLET = "dirichlet"


@dataclass(frozen=True)
class WeightSpec:
    """Probability density on a simplex, described in barycentric coordinates.

    ``alpha`` has one entry per vertex.  For ``CONSTANT`` it is all ones and
    carries no information.
    """

    kind: WeightKind
    alpha: tuple

    def __post_init__(self):
        kind = WeightKind(self.kind)
        alpha = tuple(float(a) for a in self.alpha)
        if len(alpha) < 1:
            raise ValueError("weight needs at least one vertex parameter")
        if kind is WeightKind.CONSTANT:
            alpha = (1.0,) * len(alpha)
        if min(alpha) <= 0.0:
            raise ValueError(f"weight parameters must be positive, got {alpha}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def constant(cls, d: int) -> "WeightSpec":
        return cls(WeightKind.CONSTANT, (1.0,) * (d + 1))

    @classmethod
    def affine(cls, alpha: Sequence[float]) -> "WeightSpec":
        return cls(WeightKind.AFFINE, tuple(alpha))

    @classmethod
    def dirichlet(cls, alpha: Sequence[float]) -> "WeightSpec":
        return cls(WeightKind.DIRICHLET, tuple(alpha))

    @classmethod
    def parse(cls, text: str, d: int = 3) -> "WeightSpec":
        """Parse ``constant``, ``affine:a0,a1,..`` or ``dirichlet:a0,a1,..``."""
        kind, _, rest = text.strip().partition(":")
        kind = WeightKind(kind.lower())
        if kind is WeightKind.CONSTANT:
            return cls.constant(d)
        alpha = [float(a) for a in rest.split(",") if a.strip()]
        if len(alpha) == 1:
            alpha = alpha * (d + 1)
        return cls(kind, tuple(alpha))

    @property
    def dim(self) -> int:
        return len(self.alpha) - 1

    @property
    def nvars(self) -> int:
        return len(self.alpha)

    def face(self, j: int) -> "WeightSpec":
        """Induced face density: same family with parameter ``j`` removed."""
        if self.dim < 1:
            raise ValueError("a vertex has no faces")
        if not 0 <= j <= self.dim:
            raise IndexError(f"face index {j} out of range")
        return WeightSpec(self.kind, self.alpha[:j] + self.alpha[j + 1:])

    # closed-form expectations -------------------------------------------
    def expectation(self, a: Sequence[float]) -> float:
        """``E_Omega[prod_i lambda_i^a_i]``; independent of the simplex geometry."""
        a = tuple(float(x) for x in a)
        if len(a) != self.nvars:
            raise ValueError("exponent length does not match the weight")
        if self.kind is WeightKind.AFFINE:
            total = sum(self.alpha)
            acc = 0.0
            for i, ai in enumerate(self.alpha):
                b = list(a)
                b[i] += 1.0
                acc += ai * _dirichlet_mean((1.0,) * self.nvars, b)
            return acc * self.nvars / total
        return _dirichlet_mean(self.alpha, a)

    def expect_poly(self, p: BaryPoly) -> float:
        """``E_Omega[p]`` by expansion into monomial moments."""
        if p.nvars != self.nvars:
            raise ValueError("polynomial arity does not match the weight")
        return sum(c * self.expectation(a) for a, c in p.terms.items())

    def reference_density(self, lam) -> np.ndarray:
        """``|S| * Omega``: density relative to the uniform probability measure."""
        lam = np.asarray(lam, dtype=float)
        if self.kind is WeightKind.CONSTANT:
            return np.ones(lam.shape[:-1])
        if self.kind is WeightKind.AFFINE:
            return lam @ np.array(self.alpha) * self.nvars / sum(self.alpha)
        al = np.array(self.alpha)
        d = self.dim
        logc = lgamma(al.sum()) - sum(lgamma(x) for x in al) - lgamma(d + 1)
        return exp(logc) * np.prod(lam ** (al - 1.0), axis=-1)

    def has_singular_density(self) -> bool:
        return self.kind is WeightKind.DIRICHLET and min(self.alpha) < 1.0

    def __str__(self):
        if self.kind is WeightKind.CONSTANT:
            return "constant"
        return f"{self.kind.value}:" + ",".join(f"{a:g}" for a in self.alpha)


def _dirichlet_mean(alpha: Sequence[float], a: Sequence[float]) -> float:
    """``E[prod lambda_i^a_i]`` for ``lambda ~ Dirichlet(alpha)``, via log-Gamma."""
    shifted = [x + y for x, y in zip(alpha, a)]
    if min(shifted) <= 0.0:
        raise IntegrabilityError(f"moment diverges: exponents {tuple(a)} with weight {tuple(alpha)}")
    log = lgamma(sum(alpha)) - lgamma(sum(shifted))
    log += sum(lgamma(s) - lgamma(x) for s, x in zip(shifted, alpha))
    return exp(log)


def monomial_moment(s: Simplex, exponents: Sequence[float]) -> float:
    """``int_S prod_i lambda_i^a_i dx`` for real exponents ``a_i > -1``."""
    a = [float(x) for x in exponents]
    if len(a) != s.dim + 1:
        raise ValueError("need one exponent per vertex")
    if min(a) <= -1.0:
        raise IntegrabilityError(f"exponents {tuple(a)} are not integrable")
    d = s.dim
    log = lgamma(d + 1) + sum(lgamma(x + 1.0) for x in a) - lgamma(d + 1 + sum(a))
    return s.volume * exp(log)


def inner_product_volume(s: Simplex, w: WeightSpec, p: BaryPoly, q: BaryPoly) -> float:
    """``<p, q>_Omega``, exact."""
    if w.dim != s.dim:
        raise ValueError("weight dimension does not match the simplex")
    return w.expect_poly(p * q)


def inner_product_face(s: Simplex, w: WeightSpec, j: int, p: BaryPoly, q: BaryPoly) -> float:
    """``<p, q>_{omega_j}`` for polynomials in face coordinates, exact."""
    if w.dim != s.dim:
        raise ValueError("weight dimension does not match the simplex")
    return w.face(j).expect_poly(p * q)


# quadrature ---------------------------------------------------------------

@lru_cache(maxsize=None)
def barycentric_rule(d: int, npts: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed Gauss-Jacobi rule on the unit ``d``-simplex.

    Returns barycentric points ``(n, d+1)`` and weights summing to 1 (so the
    rule integrates against the uniform probability measure).  Exact for total
    degree ``<= 2*npts - 1``.
    """
    if npts < 1:
        raise ValueError("npts must be >= 1")
    if d == 0:
        return np.ones((1, 1)), np.ones(1)
    axes = []
    for k in range(d):
        a = d - 1 - k
        x, wx = roots_jacobi(npts, a, 0.0)
        t = (1.0 + x) / 2.0
        axes.append((t, wx / 2.0 ** (a + 1)))
    grids = np.meshgrid(*[t for t, _ in axes], indexing="ij")
    wgrids = np.meshgrid(*[w for _, w in axes], indexing="ij")
    ts = [g.ravel() for g in grids]
    wt = np.prod([g.ravel() for g in wgrids], axis=0)
    coords = []
    remaining = np.ones_like(ts[0])
    for t in ts:
        coords.append(remaining * t)
        remaining = remaining * (1.0 - t)
    x = np.stack(coords, axis=1)
    lam = np.hstack([1.0 - x.sum(axis=1, keepdims=True), x])
    wt = wt * factorial(d)
    lam.setflags(write=False)
    wt.setflags(write=False)
    return lam, wt


def quad_rule_simplex(s: Simplex, npts_per_axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Cartesian points and weights on ``s``; weights sum to ``volume(s)``."""
    lam, wt = barycentric_rule(s.dim, npts_per_axis)
    return s.point(lam), wt * s.volume


def face_rule(d: int, j: int, npts: int) -> tuple[np.ndarray, np.ndarray]:
    """Rule on face ``j`` of a ``d``-simplex, as parent barycentric points."""
    mu, wt = barycentric_rule(d - 1, npts)
    return embed_face_point(mu, j), wt


def functional_data(s: Simplex, w: WeightSpec, f, q: Sequence[BaryPoly],
                    rho: Sequence[BaryPoly], npts: int = 5) -> np.ndarray:
    """Data vector ``(I_0..I_d, L_0..L_d, V_1..V_dt)`` of ``f`` on ``s``.

    ``f`` is either a :class:`BaryPoly` (integrated exactly) or a vectorized
    callable of Cartesian points ``(n, d) -> (n,)``.
    """
    d = s.dim
    if isinstance(f, BaryPoly):
        I = [w.face(j).expect_poly(restrict_to_face(f, j)) for j in range(d + 1)]
        L = [w.face(j).expect_poly(restrict_to_face(f, j) * q[j]) for j in range(d + 1)]
        V = [w.expect_poly(f * r) for r in rho]
        return np.array(I + L + V)
    if w.has_singular_density():
        raise IntegrabilityError(
            "Dirichlet parameters below 1 give a singular density; plain quadrature "
            "of non-polynomial data is refused")
    I, L = [], []
    for j in range(d + 1):
        lam, wt = face_rule(d, j, npts)
        fw = f(s.point(lam)) * wt * w.face(j).reference_density(np.delete(lam, j, axis=1))
        I.append(fw.sum())
        L.append(fw @ q[j](np.delete(lam, j, axis=1)))
    lam, wt = barycentric_rule(d, npts)
    fw = f(s.point(lam)) * wt * w.reference_density(lam)
    V = [fw @ r(lam) for r in rho]
    return np.array(I + L + V)
