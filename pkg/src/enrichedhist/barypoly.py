"""Polynomials in barycentric coordinates.

A :class:`BaryPoly` is a sparse map from exponent multi-indices
``(i_0, ..., i_d)`` to coefficients.  The representation is not reduced
modulo ``sum(lambda) = 1``; :meth:`BaryPoly.homogenized` gives a canonical
form when two polynomials need to be compared as functions.
"""

from __future__ import annotations

from itertools import combinations_with_replacement
from math import factorial
from typing import Mapping

import numpy as np

PRUNE_RTOL = 1e-15


class BaryPoly:
    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[tuple, float] | None = None):
        if nvars < 1:
            raise ValueError("nvars must be positive")
        self.nvars = nvars
        clean = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != nvars or min(alpha) < 0:
                raise ValueError(f"bad exponent {alpha} for {nvars} variables")
            clean[alpha] = clean.get(alpha, 0.0) + float(c)
        self.terms = _prune(clean)

    # constructors -------------------------------------------------------
    @classmethod
    def constant(cls, nvars: int, c: float = 1.0) -> "BaryPoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def coordinate(cls, nvars: int, i: int, c: float = 1.0) -> "BaryPoly":
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): c})

    @classmethod
    def monomial(cls, exponents, c: float = 1.0) -> "BaryPoly":
        return cls(len(exponents), {tuple(exponents): c})

    @classmethod
    def linear(cls, coeffs) -> "BaryPoly":
        """``sum_i coeffs[i] * lambda_i``."""
        n = len(coeffs)
        return sum((cls.coordinate(n, i, c) for i, c in enumerate(coeffs)), cls(n))

    # properties ---------------------------------------------------------
    @property
    def degree(self) -> int:
        return max((sum(a) for a in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def copy(self) -> "BaryPoly":
        return BaryPoly(self.nvars, dict(self.terms))

    # arithmetic ---------------------------------------------------------
    def _check(self, other: "BaryPoly"):
        if not isinstance(other, BaryPoly) or other.nvars != self.nvars:
            raise ValueError("arity mismatch between barycentric polynomials")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = BaryPoly.constant(self.nvars, other)
        self._check(other)
        out = dict(self.terms)
        for a, c in other.terms.items():
            out[a] = out.get(a, 0.0) + c
        return BaryPoly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return BaryPoly(self.nvars, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating)):
            return BaryPoly(self.nvars, {a: float(other) * c for a, c in self.terms.items()})
        return poly_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, c: float):
        return self * (1.0 / c)

    def __call__(self, lam):
        return poly_eval(self, lam)

    def __repr__(self):
        body = " + ".join(f"{c:.6g}*l^{a}" for a, c in sorted(self.terms.items()))
        return f"BaryPoly({self.nvars}, {body or '0'})"

    # canonical form -----------------------------------------------------
    def homogenized(self, degree: int | None = None) -> "BaryPoly":
        """Multiply each term by a power of ``sum(lambda)`` to reach ``degree``.

        Two barycentric polynomials agree as functions on the simplex iff their
        homogenizations to a common degree have equal coefficients.
        """
        degree = self.degree if degree is None else degree
        out: dict = {}
        for a, c in self.terms.items():
            k = degree - sum(a)
            if k < 0:
                raise ValueError("target degree below polynomial degree")
            for extra, mult in _multinomial_expansion(self.nvars, k):
                key = tuple(x + y for x, y in zip(a, extra))
                out[key] = out.get(key, 0.0) + c * mult
        return BaryPoly(self.nvars, out)

    def coefficient_vector(self, degree: int) -> np.ndarray:
        """Coefficients of the homogenized form in :func:`exponents` order."""
        h = self.homogenized(degree)
        return np.array([h.terms.get(a, 0.0) for a in exponents(self.nvars, degree)])

    def allclose(self, other: "BaryPoly", atol: float = 1e-12) -> bool:
        self._check(other)
        deg = max(self.degree, other.degree)
        return bool(np.allclose(self.coefficient_vector(deg), other.coefficient_vector(deg),
                                rtol=0.0, atol=atol))


def _prune(terms: dict) -> dict:
    if not terms:
        return {}
    cmax = max(abs(c) for c in terms.values())
    if cmax == 0.0:
        return {}
    return {a: c for a, c in terms.items() if abs(c) > PRUNE_RTOL * cmax}


def _multinomial_expansion(nvars: int, k: int):
    """Yield ``(exponent, multinomial coefficient)`` for ``(sum lambda)^k``."""
    for alpha in exponents(nvars, k):
        mult = factorial(k)
        for a in alpha:
            mult //= factorial(a)
        yield alpha, float(mult)


def exponents(nvars: int, degree: int) -> list[tuple]:
    """All exponent tuples of total degree exactly ``degree`` (sorted)."""
    out = set()
    for combo in combinations_with_replacement(range(nvars), degree):
        e = [0] * nvars
        for i in combo:
            e[i] += 1
        out.add(tuple(e))
    return sorted(out, reverse=True)


def poly_eval(p: BaryPoly, lam) -> np.ndarray | float:
    """Evaluate at barycentric point(s); ``lam`` has shape ``(nvars,)`` or ``(n, nvars)``."""
    lam = np.asarray(lam, dtype=float)
    if lam.shape[-1] != p.nvars:
        raise ValueError(f"expected {p.nvars} barycentric coordinates, got {lam.shape[-1]}")
    out = np.zeros(lam.shape[:-1])
    for a, c in p.terms.items():
        out = out + c * np.prod(lam ** np.array(a), axis=-1)
    return float(out) if out.ndim == 0 else out


def poly_mul(p: BaryPoly, q: BaryPoly) -> BaryPoly:
    p._check(q)
    out: dict = {}
    for a, c in p.terms.items():
        for b, e in q.terms.items():
            key = tuple(x + y for x, y in zip(a, b))
            out[key] = out.get(key, 0.0) + c * e
    return BaryPoly(p.nvars, out)


def restrict_to_face(p: BaryPoly, j: int) -> BaryPoly:
    """Set ``lambda_j = 0`` and relabel the rest as face coordinates."""
    if not 0 <= j < p.nvars:
        raise IndexError(f"face index {j} out of range")
    if p.nvars < 2:
        raise ValueError("cannot restrict a polynomial on a vertex")
    out = {a[:j] + a[j + 1:]: c for a, c in p.terms.items() if a[j] == 0}
    return BaryPoly(p.nvars - 1, out)


def embed_face_point(mu, j: int) -> np.ndarray:
    """Parent barycentric coordinates of a face point with coordinates ``mu``."""
    mu = np.asarray(mu, dtype=float)
    return np.insert(mu, j, 0.0, axis=-1)
