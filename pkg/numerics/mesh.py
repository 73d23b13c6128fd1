#!/usr/bin/env python
"""
Conforming simplicial meshes of convex domains in one and three dimensions.

The containing domain is stored as half-spaces n·x ≤ b with outward unit
normals, which is all the Galerkin assembly needs: membership, boundary
flags and the distance along a ray to the boundary.
"""

import logging
import os
import re
from itertools import permutations
from typing import Optional, Tuple

import numpy as np

from errors import ConfigurationError, DomainError
from geometry.polytope import Polytope

logger = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-10
MESH_HEADER = "# regularity mesh v1"


class Mesh:
    """
    Simplicial mesh with boundary flags.

    Attributes:
        nodes: (N, d) coordinates
        simplices: (M, d+1) node indices, positively oriented
        boundary: (N,) True on ∂Ω
        normals, offsets: Half-spaces n·x ≤ b describing Ω
        name: Label used in reports and file names
    """

    def __init__(self, nodes, simplices, normals, offsets, name: str = "mesh", boundary=None):
        self.nodes = np.asarray(nodes, dtype=float)
        if self.nodes.ndim == 1:
            self.nodes = self.nodes.reshape(-1, 1)
        self.simplices = np.asarray(simplices, dtype=np.int64)
        self.normals = np.atleast_2d(np.asarray(normals, dtype=float))
        self.offsets = np.asarray(offsets, dtype=float).reshape(-1)
        self.name = name
        if self.dim not in (1, 3):
            raise ConfigurationError(f"meshes are one- or three-dimensional, got d={self.dim}", key="mesh")
        if self.simplices.shape[1] != self.dim + 1:
            raise ConfigurationError(f"simplices of a {self.dim}D mesh need {self.dim + 1} nodes", key="mesh")
        self._orient()
        self.boundary = self._boundary_flags() if boundary is None else np.asarray(boundary, dtype=bool)
        self.gradients, self.volumes = self._barycentric()
        self.check()
        for array in (self.nodes, self.simplices, self.boundary):
            array.setflags(write=False)

    # ------------------------------------------------------------------ construction

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_simplices(self) -> int:
        return len(self.simplices)

    def _edge_matrices(self) -> np.ndarray:
        V = self.nodes[self.simplices]
        return np.transpose(V[:, 1:] - V[:, :1], (0, 2, 1))

    def _orient(self):
        det = np.linalg.det(self._edge_matrices())
        flip = det < 0.0
        if np.any(flip):
            self.simplices = self.simplices.copy()
            self.simplices[flip, -2:] = self.simplices[flip, -2:][:, ::-1]

    def _boundary_flags(self) -> np.ndarray:
        gap = self.offsets[None, :] - self.nodes @ self.normals.T
        return np.any(np.abs(gap) <= BOUNDARY_TOL, axis=1)

    def _barycentric(self) -> Tuple[np.ndarray, np.ndarray]:
        """Gradients (M, d+1, d) of the barycentric coordinates and simplex volumes."""
        E = self._edge_matrices()
        det = np.linalg.det(E)
        if np.any(det <= 0.0):
            raise ConfigurationError(f"mesh {self.name} has {int(np.sum(det <= 0.0))} degenerate simplices", key="mesh")
        inv = np.linalg.inv(E)
        G = np.concatenate([-inv.sum(axis=1, keepdims=True), inv], axis=1)
        factorial = 1.0 if self.dim == 1 else 6.0
        return G, det / factorial

    def check(self) -> None:
        """
        Conformity check: every facet is shared by two simplices or lies on ∂Ω,
        and every node lies in the closed domain.

        Raises:
            ConfigurationError: the mesh is not conforming
        """
        if np.any(self.nodes @ self.normals.T - self.offsets[None, :] > BOUNDARY_TOL):
            raise ConfigurationError(f"mesh {self.name} has nodes outside its domain", key="mesh")
        facets = np.sort(np.concatenate([np.delete(self.simplices, k, axis=1) for k in range(self.dim + 1)]), axis=1)
        unique, counts = np.unique(facets, axis=0, return_counts=True)
        if np.any(counts > 2):
            raise ConfigurationError(f"mesh {self.name} has facets shared by more than two simplices", key="mesh")
        lone = unique[counts == 1]
        if len(lone) and not np.all(self.boundary[lone]):
            raise ConfigurationError(f"mesh {self.name} has hanging facets inside the domain", key="mesh")

    # ------------------------------------------------------------------ queries

    @property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    @property
    def diameters(self) -> np.ndarray:
        V = self.nodes[self.simplices]
        diffs = V[:, :, None, :] - V[:, None, :, :]
        return np.linalg.norm(diffs, axis=-1).reshape(len(V), -1).max(axis=1)

    @property
    def h(self) -> float:
        return float(self.diameters.max())

    @property
    def diameter(self) -> float:
        lo, hi = self.nodes.min(axis=0), self.nodes.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def contains(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.all(X @ self.normals.T < self.offsets[None, :], axis=1)

    def exit_distance(self, X: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        """
        Distance from interior points X (P, d) along unit directions (R, d)
        to ∂Ω, as a (P, R) array.
        """
        gap = self.offsets[None, :] - X @ self.normals.T
        speed = dirs @ self.normals.T
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(speed[None, :, :] > 0.0, gap[:, None, :] / speed[None, :, :], np.inf)
        return t.min(axis=2)

    def barycentric(self, k: int, X: np.ndarray) -> np.ndarray:
        """Barycentric coordinates of points with respect to simplex k, extended linearly outside it."""
        V0 = self.nodes[self.simplices[k, 0]]
        lam = (X - V0) @ self.gradients[k].T
        lam[:, 0] += 1.0
        return lam

    def locate(self, X, chunk: int = 256) -> Tuple[np.ndarray, np.ndarray]:
        """
        Simplex index and barycentric coordinates of each point.

        Raises:
            DomainError: a point lies outside the mesh
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.dim == 1 and X.shape[1] != 1:
            X = X.reshape(-1, 1)
        V0 = self.nodes[self.simplices[:, 0]]
        owner = np.empty(len(X), dtype=np.int64)
        lam = np.empty((len(X), self.dim + 1))
        for start in range(0, len(X), chunk):
            Xc = X[start:start + chunk]
            L = np.einsum("mkd,pmd->pmk", self.gradients, Xc[:, None, :] - V0[None, :, :])
            L[:, :, 0] += 1.0
            worst = L.min(axis=2)
            best = np.argmax(worst, axis=1)
            if np.any(worst[np.arange(len(Xc)), best] < -1e-9):
                bad = Xc[np.argmin(worst[np.arange(len(Xc)), best])]
                raise DomainError(f"point {bad.tolist()} is outside mesh {self.name}")
            owner[start:start + chunk] = best
            lam[start:start + chunk] = L[np.arange(len(Xc)), best]
        return owner, lam

    def mapped_points(self, lam: np.ndarray) -> np.ndarray:
        """Physical points (M, Q, d) of reference barycentric points (Q, d+1) in every simplex."""
        return np.einsum("qk,mkd->mqd", lam, self.nodes[self.simplices])

    # ------------------------------------------------------------------ files

    def save(self, path: str) -> str:
        """Write the mesh as ASCII: header, domain half-spaces, nodes with flags, simplices."""
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"{MESH_HEADER}\n")
            f.write(f"name {self.name}\n")
            f.write(f"dim {self.dim}\n")
            f.write(f"halfspaces {len(self.offsets)}\n")
            for n, b in zip(self.normals, self.offsets):
                f.write(" ".join(repr(float(c)) for c in n) + f" {float(b)!r}\n")
            f.write(f"nodes {self.n_nodes}\n")
            for x, flag in zip(self.nodes, self.boundary):
                f.write(" ".join(repr(float(c)) for c in x) + f" {int(flag)}\n")
            f.write(f"simplices {self.n_simplices}\n")
            for row in self.simplices:
                f.write(" ".join(str(int(i)) for i in row) + "\n")
        logger.info(f"Saved mesh {self.name} ({self.n_simplices} simplices) to {path}")
        return path

    @staticmethod
    def load(path: str) -> "Mesh":
        with open(path, encoding="utf-8") as f:
            lines = [line.strip() for line in f if line.strip() and not line.startswith("#")]

        def section(index: int, label: str) -> int:
            key, count = lines[index].split()
            if key != label:
                raise ConfigurationError(f"mesh file {path}: expected '{label}', found '{key}'", key="mesh")
            return int(count)

        try:
            name = lines[0].split(maxsplit=1)[1]
            section(1, "dim")
            i = 2
            n_half = section(i, "halfspaces")
            half = np.array([[float(c) for c in lines[i + 1 + k].split()] for k in range(n_half)])
            i += 1 + n_half
            n_nodes = section(i, "nodes")
            rows = np.array([[float(c) for c in lines[i + 1 + k].split()] for k in range(n_nodes)])
            i += 1 + n_nodes
            n_simplices = section(i, "simplices")
            simplices = [[int(c) for c in lines[i + 1 + k].split()] for k in range(n_simplices)]
        except (IndexError, ValueError) as exc:
            raise ConfigurationError(f"mesh file {path} is malformed: {exc}", key="mesh") from exc
        return Mesh(rows[:, :-1], simplices, half[:, :-1], half[:, -1], name=name, boundary=rows[:, -1] > 0.5)

    def __repr__(self) -> str:
        return f"Mesh({self.name!r}, d={self.dim}, {self.n_simplices} simplices, {len(self.interior)} interior nodes)"


# ---------------------------------------------------------------------- builders

def interval_mesh(n: int, a: float = -1.0, b: float = 1.0) -> Mesh:
    """Uniform mesh of (a, b) with n elements."""
    if n < 1:
        raise ConfigurationError(f"an interval mesh needs at least one element, got {n}", key="mesh")
    nodes = np.linspace(a, b, n + 1).reshape(-1, 1)
    simplices = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return Mesh(nodes, simplices, [[-1.0], [1.0]], [-a, b], name=f"interval{n}")


def box_halfspaces(lo, hi) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    eye = np.eye(len(lo))
    return np.vstack([-eye, eye]), np.concatenate([-lo, hi])


def cube_mesh(n: int, polytope: Optional[Polytope] = None) -> Mesh:
    """
    Kuhn subdivision of the unit cube: n³ subcubes, 6 tetrahedra each.

    Every tetrahedron follows a monotone lattice path from a subcube's lower
    corner to its upper corner, so cube_mesh(2n) refines cube_mesh(n).
    """
    if n < 1:
        raise ConfigurationError(f"a cube mesh needs n ≥ 1, got {n}", key="mesh")
    grid = np.linspace(0.0, 1.0, n + 1)
    I, J, K = np.meshgrid(np.arange(n + 1), np.arange(n + 1), np.arange(n + 1), indexing="ij")
    nodes = np.column_stack([grid[I.ravel()], grid[J.ravel()], grid[K.ravel()]])

    def index(ijk: np.ndarray) -> np.ndarray:
        return (ijk[..., 0] * (n + 1) + ijk[..., 1]) * (n + 1) + ijk[..., 2]

    corners = np.stack(np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij"), axis=-1).reshape(-1, 3)
    eye = np.eye(3, dtype=np.int64)
    tets = []
    for perm in permutations(range(3)):
        path = np.cumsum(np.vstack([np.zeros(3, dtype=np.int64), eye[list(perm)]]), axis=0)
        tets.append(index(corners[:, None, :] + path[None, :, :]))
    simplices = np.concatenate(tets)
    if polytope is None:
        normals, offsets = box_halfspaces([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])
    else:
        normals, offsets = polytope.normals, polytope.offsets
    return Mesh(nodes, simplices, normals, offsets, name=f"cube{n}")


def named_mesh(name_or_path: str) -> Mesh:
    """'interval<n>', 'cube<n>' or the path of a saved mesh file."""
    if os.path.isfile(name_or_path):
        return Mesh.load(name_or_path)
    match = re.fullmatch(r"(interval|cube)(\d+)", name_or_path)
    if match is None:
        raise ValueError(f"Unsupported mesh: {name_or_path}")
    kind, n = match.group(1), int(match.group(2))
    return interval_mesh(n) if kind == "interval" else cube_mesh(n)
