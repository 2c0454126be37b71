"""Simplices, barycentric coordinates and affine maps."""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np


class GeometryError(ValueError):
    """Raised for degenerate simplices or invalid face indices."""


@dataclass(frozen=True, eq=False)
class Simplex:
    """A nondegenerate ``dim``-simplex given by ``dim + 1`` vertices.

    The ambient dimension may exceed ``dim``; this happens for faces, which
    keep the coordinates of their parent simplex.
    """

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < v.shape[0] - 1:
            raise GeometryError(f"bad vertex array of shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        if self.dim > 0:
            hmax = max(np.linalg.norm(a - b) for a in v for b in v)
            if hmax == 0.0 or self.volume < 1e-12 * hmax ** self.dim:
                raise GeometryError("degenerate simplex")

    @property
    def dim(self) -> int:
        return self.vertices.shape[0] - 1

    @property
    def ambient_dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def edge_matrix(self) -> np.ndarray:
        """Columns ``v_i - v_0`` for ``i = 1..dim``."""
        return (self.vertices[1:] - self.vertices[0]).T

    @property
    def volume(self) -> float:
        if self.dim == 0:
            return 1.0
        E = self.edge_matrix
        if E.shape[0] == E.shape[1]:
            det = abs(np.linalg.det(E))
        else:
            det = np.sqrt(max(np.linalg.det(E.T @ E), 0.0))
        return float(det / factorial(self.dim))

    @property
    def diameter(self) -> float:
        v = self.vertices
        return float(max(np.linalg.norm(a - b) for a in v for b in v))

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def face(self, j: int) -> "Simplex":
        """Face opposite vertex ``j``; vertices kept in increasing parent order."""
        if not 0 <= j <= self.dim:
            raise GeometryError(f"face index {j} out of range for a {self.dim}-simplex")
        keep = [i for i in range(self.dim + 1) if i != j]
        return Simplex(self.vertices[keep])

    def barycentric(self, x) -> np.ndarray:
        """Barycentric coordinates of one point or of an ``(n, ambient)`` array."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        rhs = (pts - self.vertices[0]).T
        E = self.edge_matrix
        if E.shape[0] == E.shape[1]:
            tail = np.linalg.solve(E, rhs)
        else:
            tail = np.linalg.lstsq(E, rhs, rcond=None)[0]
        lam = np.vstack([1.0 - tail.sum(axis=0), tail]).T
        return lam[0] if single else lam

    def point(self, lam) -> np.ndarray:
        """Cartesian point(s) with barycentric coordinates ``lam``."""
        return np.asarray(lam, dtype=float) @ self.vertices


def barycentric_coords(s: Simplex, x) -> np.ndarray:
    return s.barycentric(x)


def volume(s: Simplex) -> float:
    return s.volume


def face(s: Simplex, j: int) -> Simplex:
    return s.face(j)


def reference_simplex(d: int) -> Simplex:
    """The unit simplex ``conv{0, e_1, ..., e_d}``."""
    return Simplex(np.vstack([np.zeros(d), np.eye(d)]))


@dataclass(frozen=True, eq=False)
class AffineMap:
    """``x -> matrix @ x + offset``."""

    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        A = np.array(self.matrix, dtype=float)
        b = np.array(self.offset, dtype=float)
        scale = max(np.abs(A).max(), 1e-300)
        if abs(np.linalg.det(A)) <= 1e-12 * scale ** A.shape[0]:
            raise GeometryError("affine map is not invertible")
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "offset", b)

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.matrix.T + self.offset

    def inverse(self) -> "AffineMap":
        Ainv = np.linalg.inv(self.matrix)
        return AffineMap(Ainv, -Ainv @ self.offset)

    @property
    def jacobian(self) -> float:
        return float(np.linalg.det(self.matrix))


def affine_map_between(src: Simplex, dst: Simplex) -> AffineMap:
    """Affine bijection taking ``src.vertices[i]`` to ``dst.vertices[i]``."""
    if src.dim != dst.dim or src.ambient_dim != src.dim or dst.ambient_dim != dst.dim:
        raise GeometryError("affine maps need full-dimensional simplices of equal dimension")
    A = dst.edge_matrix @ np.linalg.inv(src.edge_matrix)
    b = dst.vertices[0] - A @ src.vertices[0]
    return AffineMap(A, b)
