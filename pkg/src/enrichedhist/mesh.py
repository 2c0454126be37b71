"""Tetrahedral meshes of the unit cube."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import permutations

import numpy as np


class MeshError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class TetMesh:
    vertices: np.ndarray
    tets: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        t = np.array(self.tets, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3 or t.ndim != 2 or t.shape[1] != 4:
            raise MeshError("vertices must be (n, 3) and tets (m, 4)")
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "tets", t)

    @property
    def n_tets(self) -> int:
        return self.tets.shape[0]

    def element_vertices(self) -> np.ndarray:
        """``(m, 4, 3)`` vertex coordinates per tet."""
        return self.vertices[self.tets]

    def signed_volumes(self) -> np.ndarray:
        p = self.element_vertices()
        e = p[:, 1:] - p[:, :1]
        return np.linalg.det(e) / 6.0

    def volumes(self) -> np.ndarray:
        return np.abs(self.signed_volumes())

    def diameters(self) -> np.ndarray:
        p = self.element_vertices()
        diff = p[:, :, None, :] - p[:, None, :, :]
        return np.sqrt((diff ** 2).sum(-1)).reshape(len(p), -1).max(axis=1)

    @property
    def h(self) -> float:
        return float(self.diameters().max())

    def faces_shared_count(self) -> Counter:
        """Multiplicity of each triangular face (sorted vertex triple)."""
        c: Counter = Counter()
        for t in self.tets:
            for j in range(4):
                c[tuple(sorted(np.delete(t, j)))] += 1
        return c

    def dump(self, path) -> None:
        """Plain text: one line per vertex, then one line per tet (0-based)."""
        with open(path, "w") as fh:
            for x in self.vertices:
                fh.write(" ".join(repr(float(c)) for c in x) + "\n")
            for t in self.tets:
                fh.write(" ".join(str(int(i)) for i in t) + "\n")

    @classmethod
    def load(cls, path) -> "TetMesh":
        verts, tets = [], []
        with open(path) as fh:
            for line in fh:
                parts = line.split()
                if not parts:
                    continue
                if len(parts) == 3:
                    verts.append([float(p) for p in parts])
                elif len(parts) == 4:
                    tets.append([int(p) for p in parts])
                else:
                    raise MeshError(f"bad mesh line: {line!r}")
        return cls(np.array(verts), np.array(tets))


def _kuhn_cell_tets() -> np.ndarray:
    """Six Kuhn tets of the unit cell as indices into its 8 corners (bit order x,y,z)."""
    out = []
    for perm in permutations(range(3)):
        corner = np.zeros(3, dtype=int)
        path = [0]
        for axis in perm:
            corner[axis] = 1
            path.append(int(corner[0] + 2 * corner[1] + 4 * corner[2]))
        out.append(path)
    return np.array(out)


def _orient(vertices: np.ndarray, tets: np.ndarray) -> np.ndarray:
    p = vertices[tets]
    vol = np.linalg.det(p[:, 1:] - p[:, :1])
    tets = tets.copy()
    neg = vol < 0
    tets[neg, 2], tets[neg, 3] = tets[neg, 3].copy(), tets[neg, 2].copy()
    return tets


def uniform_mesh(n: int) -> TetMesh:
    """Kuhn split of the ``(n-1)^3`` grid cells: ``n^3`` vertices, ``6 (n-1)^3`` tets."""
    if n < 2:
        raise ValueError("n must be >= 2")
    g = np.linspace(0.0, 1.0, n)
    x, y, z = np.meshgrid(g, g, g, indexing="ij")
    verts = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
    idx = np.arange(n ** 3).reshape(n, n, n)
    base = idx[:-1, :-1, :-1].ravel()
    # corner bit b = bx + 2 by + 4 bz maps to offs[b]: x is the slowest index
    offs = np.array([bx * n * n + by * n + bz
                     for bz in (0, 1) for by in (0, 1) for bx in (0, 1)])
    local = _kuhn_cell_tets()
    tets = (base[:, None, None] + offs[local][None]).reshape(-1, 4)
    return TetMesh(verts, _orient(verts, tets))


def interior_mask(vertices: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    v = np.asarray(vertices)
    return np.all((v > tol) & (v < 1.0 - tol), axis=1)


def quasi_uniform_mesh(n: int, delta: float = 0.2, seed: int = 0,
                       max_tries: int = 10, max_shrinks: int = 8) -> TetMesh:
    """Uniform mesh with interior vertices moved by at most ``delta / (n - 1)``.

    Displacements are uniform in the ball.  Connectivity is kept.  A draw
    that inverts an element is resampled; after ``max_tries`` failures the
    magnitude is halved.
    """
    if not 0.0 <= delta <= 0.25:
        raise ValueError("delta must lie in [0, 0.25]")
    base = uniform_mesh(n)
    if delta == 0.0:
        return base
    rng = np.random.default_rng(seed)
    inner = interior_mask(base.vertices)
    m = int(inner.sum())
    radius = delta / (n - 1)
    for _ in range(max_shrinks + 1):
        for _ in range(max_tries):
            direction = rng.normal(size=(m, 3))
            direction /= np.linalg.norm(direction, axis=1, keepdims=True)
            r = radius * rng.random(m) ** (1.0 / 3.0)
            v = base.vertices.copy()
            v[inner] += direction * r[:, None]
            mesh = TetMesh(v, base.tets)
            if np.all(mesh.signed_volumes() > 0.0):
                return mesh
        radius *= 0.5
    raise MeshError("perturbation keeps inverting elements")
