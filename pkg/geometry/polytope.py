#!/usr/bin/env python
"""
Bounded polyhedra in R^3: combinatorics, adjacency sets and distance fields.

A Polytope is immutable after construction. All distance queries are
vectorized over point batches of shape (N, 3).
"""

import json
import logging
from functools import cached_property
from itertools import combinations
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import shapely
from scipy.spatial.distance import pdist
from shapely.geometry import Polygon

from errors import (
    ConfigurationError,
    DegenerateFaceError,
    DomainError,
    OpenBoundaryError,
    PolytopeParseError,
    SingularPointError,
)

logger = logging.getLogger(__name__)

COPLANARITY_TOL = 1e-10
# Generic ray direction for parity tests; irrational-looking so it misses edges
_RAY = np.array([0.5773502691896258, 0.5784731012345671, 0.5762299348717732])
_RAY = _RAY / np.linalg.norm(_RAY)


class FeatureDistances(NamedTuple):
    """Distances of a batch of points to every vertex, edge and face."""
    r_v: np.ndarray    # (N, n_vertices)
    r_e: np.ndarray    # (N, n_edges)
    r_f: np.ndarray    # (N, n_faces)
    r_bnd: np.ndarray  # (N,)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _directed_edges(loop: Sequence[int]) -> List[Tuple[int, int]]:
    return [(loop[k], loop[(k + 1) % len(loop)]) for k in range(len(loop))]


def _newell(points: np.ndarray) -> np.ndarray:
    """Newell vector of a closed loop: twice the area times the unit normal."""
    nxt = np.roll(points, -1, axis=0)
    return np.array([
        np.sum((points[:, 1] - nxt[:, 1]) * (points[:, 2] + nxt[:, 2])),
        np.sum((points[:, 2] - nxt[:, 2]) * (points[:, 0] + nxt[:, 0])),
        np.sum((points[:, 0] - nxt[:, 0]) * (points[:, 1] + nxt[:, 1])),
    ])


def segment_distances(X: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """
    Distances from points to closed segments.

    Args:
        X: Points, shape (N, 3)
        A: Segment starts, shape (M, 3)
        B: Segment ends, shape (M, 3)

    Returns:
        Array (N, M) of distances
    """
    D = B - A
    L2 = np.einsum("ij,ij->i", D, D)
    rel = X[:, None, :] - A[None, :, :]
    t = np.clip(np.einsum("nmj,mj->nm", rel, D) / L2[None, :], 0.0, 1.0)
    closest = A[None, :, :] + t[..., None] * D[None, :, :]
    return np.linalg.norm(X[:, None, :] - closest, axis=2)


def segment_segment_distance(p1: np.ndarray, q1: np.ndarray, p2: np.ndarray, q2: np.ndarray) -> float:
    """Distance between two closed segments in R^3 (closest-point parametrization)."""
    d1, d2, r = q1 - p1, q2 - p2, p1 - p2
    a, e, f = d1 @ d1, d2 @ d2, d2 @ r
    c, b = d1 @ r, d1 @ d2
    denom = a * e - b * b
    s = np.clip((b * f - c * e) / denom, 0.0, 1.0) if denom > 1e-14 * a * e else 0.0
    t = (b * s + f) / e
    if t < 0.0:
        t, s = 0.0, np.clip(-c / a, 0.0, 1.0)
    elif t > 1.0:
        t, s = 1.0, np.clip((b - c) / a, 0.0, 1.0)
    return float(np.linalg.norm((p1 + s * d1) - (p2 + t * d2)))


class Polytope:
    """
    Closed polyhedral surface bounding a Lipschitz domain.

    Faces are stored as vertex loops oriented counter-clockwise when seen from
    outside, so `normals` point outward. Edges are pairs (i, j) with i < j and
    unit direction from vertex i to vertex j.
    """

    def __init__(self, vertices, faces, name: str = "polytope", length_scale: float = 1.0):
        V = np.array(vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] != 3 or len(V) < 4:
            raise PolytopeParseError("vertices must be a list of at least four 3D points")
        if not np.all(np.isfinite(V)):
            raise PolytopeParseError("vertex coordinates must be finite")
        loops = []
        for k, face in enumerate(faces):
            loop = [int(i) for i in face]
            if len(loop) < 3 or len(set(loop)) != len(loop):
                raise PolytopeParseError(f"face {k} needs at least three distinct vertices")
            if min(loop) < 0 or max(loop) >= len(V):
                raise PolytopeParseError(f"face {k} references a missing vertex")
            loops.append(loop)
        if len(loops) < 4:
            raise PolytopeParseError("a closed polyhedron needs at least four faces")

        self.name = name
        self.length_scale = float(length_scale)
        self.vertices = V
        self.vertices.setflags(write=False)
        self.diameter = float(pdist(V).max())

        edge_faces = self._edge_face_incidence(loops)
        loops = self._orient(loops, edge_faces)
        self.faces: Tuple[Tuple[int, ...], ...] = tuple(tuple(l) for l in loops)
        self._init_planes()
        self._init_adjacency(edge_faces)
        self._init_face_charts()
        logger.debug(f"Loaded polytope {name}: {self.n_vertices} vertices, {self.n_edges} edges, {self.n_faces} faces")

    # ------------------------------------------------------------------ construction

    @staticmethod
    def _edge_face_incidence(loops: List[List[int]]) -> Dict[Tuple[int, int], List[int]]:
        incidence: Dict[Tuple[int, int], List[int]] = {}
        for f, loop in enumerate(loops):
            for a, b in _directed_edges(loop):
                incidence.setdefault((min(a, b), max(a, b)), []).append(f)
        for edge, owners in incidence.items():
            if len(owners) != 2:
                raise OpenBoundaryError(f"edge {edge} belongs to {len(owners)} faces; the boundary is not closed")
        return incidence

    @staticmethod
    def _orient(loops: List[List[int]], edge_faces: Dict[Tuple[int, int], List[int]]) -> List[List[int]]:
        """Make neighbouring faces traverse shared edges in opposite directions."""
        loops = [list(l) for l in loops]
        directed = [set(_directed_edges(l)) for l in loops]
        seen = {0}
        queue = [0]
        while queue:
            f = queue.pop(0)
            for a, b in _directed_edges(loops[f]):
                g = [h for h in edge_faces[(min(a, b), max(a, b))] if h != f][0]
                clash = (a, b) in directed[g]
                if g in seen:
                    if clash:
                        raise PolytopeParseError("boundary surface is not orientable")
                    continue
                if clash:
                    loops[g].reverse()
                    directed[g] = set(_directed_edges(loops[g]))
                seen.add(g)
                queue.append(g)
        if len(seen) != len(loops):
            raise PolytopeParseError("boundary surface is not connected")
        return loops

    def _init_planes(self):
        newell = [_newell(self.vertices[list(loop)]) for loop in self.faces]
        signed_volume = sum(self.vertices[loop[0]] @ N for loop, N in zip(self.faces, newell)) / 6.0
        if signed_volume < 0:
            self.faces = tuple(tuple(reversed(loop)) for loop in self.faces)
            newell = [-N for N in newell]
        self.volume = abs(signed_volume)

        tol = COPLANARITY_TOL * max(1.0, self.diameter)
        normals, offsets, areas = [], [], []
        for k, (loop, N) in enumerate(zip(self.faces, newell)):
            area = 0.5 * np.linalg.norm(N)
            if area <= 1e-12 * max(1.0, self.diameter) ** 2:
                raise DegenerateFaceError(f"face {k} has zero area")
            n = N / np.linalg.norm(N)
            pts = self.vertices[list(loop)]
            if np.max(np.abs((pts - pts[0]) @ n)) > tol:
                raise PolytopeParseError(f"face {k} is not planar within {tol:g}")
            normals.append(n)
            offsets.append(float(n @ pts.mean(axis=0)))
            areas.append(area)
        self.normals = np.array(normals)
        self.offsets = np.array(offsets)
        self.face_areas = np.array(areas)

    def _init_adjacency(self, edge_faces: Dict[Tuple[int, int], List[int]]):
        self.edges: Tuple[Tuple[int, int], ...] = tuple(sorted(edge_faces))
        self.edge_index = {e: k for k, e in enumerate(self.edges)}
        ends = np.array(self.edges)
        self.edge_starts = self.vertices[ends[:, 0]]
        self.edge_ends = self.vertices[ends[:, 1]]
        vec = self.edge_ends - self.edge_starts
        self.edge_lengths = np.linalg.norm(vec, axis=1)
        self.edge_directions = vec / self.edge_lengths[:, None]

        self.V_e = self.edges
        self.F_e = tuple(tuple(sorted(edge_faces[e])) for e in self.edges)
        self.V_f = self.faces
        self.E_f = tuple(
            tuple(self.edge_index[(min(a, b), max(a, b))] for a, b in _directed_edges(loop))
            for loop in self.faces
        )
        E_v: List[List[int]] = [[] for _ in range(self.n_vertices)]
        F_v: List[List[int]] = [[] for _ in range(self.n_vertices)]
        for k, (i, j) in enumerate(self.edges):
            E_v[i].append(k)
            E_v[j].append(k)
        for f, loop in enumerate(self.faces):
            for v in loop:
                F_v[v].append(f)
        self.E_v = tuple(tuple(sorted(x)) for x in E_v)
        self.F_v = tuple(tuple(sorted(x)) for x in F_v)

    def _init_face_charts(self):
        """In-plane orthonormal basis (u along the first loop edge) and shapely polygon per face."""
        origins, us, ws, polygons = [], [], [], []
        for f, loop in enumerate(self.faces):
            p0 = self.vertices[loop[0]]
            u = _unit(self.vertices[loop[1]] - p0)
            w = np.cross(self.normals[f], u)
            pts = self.vertices[list(loop)] - p0
            poly = Polygon(np.column_stack([pts @ u, pts @ w]))
            shapely.prepare(poly)
            origins.append(p0)
            us.append(u)
            ws.append(w)
            polygons.append(poly)
        self.face_origins = np.array(origins)
        self.face_u = np.array(us)
        self.face_w = np.array(ws)
        self.face_polygons = tuple(polygons)

    # ------------------------------------------------------------------ basic properties

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def inward_normal(self, f: int) -> np.ndarray:
        return -self.normals[f]

    def edge_midpoint(self, e: int) -> np.ndarray:
        return 0.5 * (self.edge_starts[e] + self.edge_ends[e])

    def edge_direction_from(self, e: int, v: int) -> np.ndarray:
        """Unit direction of edge e pointing away from its endpoint v."""
        i, j = self.edges[e]
        if v == i:
            return self.edge_directions[e].copy()
        if v == j:
            return -self.edge_directions[e]
        raise ValueError(f"vertex {v} is not an endpoint of edge {e}")

    def face_coordinates(self, f: int, points: np.ndarray) -> np.ndarray:
        """In-plane coordinates of the orthogonal projections of points onto face f's plane."""
        rel = np.atleast_2d(points) - self.face_origins[f]
        return np.column_stack([rel @ self.face_u[f], rel @ self.face_w[f]])

    def face_point(self, f: int, coords: np.ndarray) -> np.ndarray:
        """Inverse of face_coordinates for points in the plane."""
        coords = np.atleast_2d(coords)
        return self.face_origins[f] + coords[:, :1] * self.face_u[f] + coords[:, 1:2] * self.face_w[f]

    def in_face_direction(self, e: int, f: int) -> np.ndarray:
        """Unit vector in the plane of f, orthogonal to e, pointing from e into f."""
        if e not in self.E_f[f]:
            raise ValueError(f"edge {e} does not bound face {f}")
        candidate = _unit(np.cross(self.normals[f], self.edge_directions[e]))
        probe = self.edge_midpoint(e) + 1e-6 * self.edge_lengths[e] * candidate
        xy = self.face_coordinates(f, probe)[0]
        if shapely.contains_xy(self.face_polygons[f], xy[0], xy[1]):
            return candidate
        return -candidate

    def interior_angle(self, e: int) -> float:
        """Interior dihedral angle of Ω at edge e, in (0, 2π)."""
        f1, f2 = self.F_e[e]
        w1, w2 = self.in_face_direction(e, f1), self.in_face_direction(e, f2)
        opening = float(np.arccos(np.clip(w1 @ w2, -1.0, 1.0)))
        if self.inward_normal(f1) @ w2 > 0:
            return opening
        return 2.0 * np.pi - opening

    def scaled(self, lam: float) -> "Polytope":
        """Homothetic copy about the origin."""
        return Polytope(lam * self.vertices, self.faces, name=f"{self.name}x{lam:g}",
                        length_scale=lam * self.length_scale)

    def to_dict(self) -> Dict:
        return {"name": self.name, "vertices": self.vertices.tolist(), "faces": [list(l) for l in self.faces]}

    # ------------------------------------------------------------------ distances

    def distances(self, points, check_domain: bool = False) -> FeatureDistances:
        """
        Distances to all features for a batch of points.

        Args:
            points: Array (N, 3) or a single point
            check_domain: Raise DomainError if any point is outside the closure of Ω

        Returns:
            FeatureDistances with one column per feature
        """
        X = np.atleast_2d(np.asarray(points, dtype=float))
        r_v = np.linalg.norm(X[:, None, :] - self.vertices[None, :, :], axis=2)
        r_e = segment_distances(X, self.edge_starts, self.edge_ends)
        r_f = np.empty((len(X), self.n_faces))
        for f in range(self.n_faces):
            plane = np.abs(X @ self.normals[f] - self.offsets[f])
            xy = self.face_coordinates(f, X)
            inside = shapely.intersects_xy(self.face_polygons[f], xy[:, 0], xy[:, 1])
            rim = r_e[:, list(self.E_f[f])].min(axis=1)
            r_f[:, f] = np.where(inside, plane, rim)
        r_bnd = r_f.min(axis=1)
        if check_domain:
            outside = ~self.contains(X, distances=r_bnd)
            if np.any(outside):
                raise DomainError(f"point {X[np.argmax(outside)].tolist()} lies outside {self.name}")
        return FeatureDistances(r_v, r_e, r_f, r_bnd)

    def contains(self, points, distances: Optional[np.ndarray] = None, tol: float = 1e-12) -> np.ndarray:
        """Membership in the closure of Ω by boundary proximity and ray parity."""
        X = np.atleast_2d(np.asarray(points, dtype=float))
        if distances is None:
            distances = self.distances(X).r_bnd
        on_boundary = distances <= tol * max(1.0, self.diameter)
        crossings = np.zeros(len(X), dtype=int)
        for f in range(self.n_faces):
            denom = self.normals[f] @ _RAY
            if abs(denom) < 1e-14:
                continue
            t = (self.offsets[f] - X @ self.normals[f]) / denom
            ahead = t > 0
            hit = X + t[:, None] * _RAY
            xy = self.face_coordinates(f, hit)
            inside = shapely.intersects_xy(self.face_polygons[f], xy[:, 0], xy[:, 1])
            crossings += (ahead & inside).astype(int)
        return on_boundary | (crossings % 2 == 1)

    def dist_features(self, x) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        """Distances of a single point of the closure to every vertex, edge and face, and to ∂Ω."""
        d = self.distances(np.asarray(x, dtype=float).reshape(1, 3), check_domain=True)
        return d.r_v[0], d.r_e[0], d.r_f[0], float(d.r_bnd[0])

    def rho(self, x, v: int, e: int, f: Optional[int] = None) -> Tuple[float, Optional[float]]:
        """
        Relative distances ρ_ve = r_e/r_v and ρ_ef = r_f/r_e at a single point.

        ρ_ef is only computed when a face is given.

        Raises:
            SingularPointError: if x lies on v, or on e while a face is given
        """
        r_v, r_e, r_f, _ = self.dist_features(x)
        tol = 1e-14 * max(1.0, self.diameter)
        if r_v[v] <= tol:
            raise SingularPointError(f"point coincides with vertex {v}")
        rho_ve = float(r_e[e] / r_v[v])
        if f is None:
            return rho_ve, None
        if r_e[e] <= tol:
            raise SingularPointError(f"point lies on edge {e}; ρ_ef is undefined")
        return rho_ve, float(r_f[f] / r_e[e])

    # ------------------------------------------------------------------ sampling and separation

    def sample_interior(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform samples in Ω by rejection from the bounding box."""
        lo, hi = self.bounding_box
        accepted: List[np.ndarray] = []
        count = 0
        while count < n:
            batch = rng.uniform(lo, hi, size=(max(2 * (n - count), 64), 3))
            batch = batch[self.contains(batch)]
            accepted.append(batch)
            count += len(batch)
        return np.concatenate(accepted)[:n]

    @cached_property
    def min_feature_separation(self) -> float:
        """Smallest distance between two features that share no vertex."""
        best = np.inf
        V = self.vertices
        adjacent = {(i, j) for i, j in self.edges}
        for i, j in combinations(range(self.n_vertices), 2):
            if (i, j) not in adjacent:
                best = min(best, float(np.linalg.norm(V[i] - V[j])))
        d = self.distances(V)
        for v in range(self.n_vertices):
            for e, (i, j) in enumerate(self.edges):
                if v not in (i, j):
                    best = min(best, d.r_e[v, e])
            for f, loop in enumerate(self.faces):
                if v not in loop:
                    best = min(best, d.r_f[v, f])
        for e1, e2 in combinations(range(self.n_edges), 2):
            if not set(self.edges[e1]) & set(self.edges[e2]):
                best = min(best, segment_segment_distance(self.edge_starts[e1], self.edge_ends[e1],
                                                          self.edge_starts[e2], self.edge_ends[e2]))
        for e, ends in enumerate(self.edges):
            for f, loop in enumerate(self.faces):
                if not set(ends) & set(loop):
                    best = min(best, d.r_f[ends[0], f], d.r_f[ends[1], f])
                    for g in self.E_f[f]:
                        best = min(best, segment_segment_distance(self.edge_starts[e], self.edge_ends[e],
                                                                  self.edge_starts[g], self.edge_ends[g]))
        for f, g in combinations(range(self.n_faces), 2):
            if not set(self.faces[f]) & set(self.faces[g]):
                best = min(best, d.r_f[list(self.faces[f]), g].min(), d.r_f[list(self.faces[g]), f].min())
        return float(best)

    def max_admissible_xi(self) -> float:
        """Supremum of ξ with 2ξ·diam(Ω) below the feature separation."""
        return self.min_feature_separation / (2.0 * self.diameter)

    def check_xi(self, xi: float) -> None:
        """
        Raises:
            ConfigurationError: if ξ is outside (0, 1) or too large for the feature separation
        """
        if not 0.0 < xi < 1.0:
            raise ConfigurationError(f"xi={xi} must lie in (0, 1)", key="xi")
        if 2.0 * xi * self.diameter >= self.min_feature_separation:
            raise ConfigurationError(
                f"xi={xi} too large for {self.name}: need xi < {self.max_admissible_xi():.6g}", key="xi")

    def __repr__(self) -> str:
        return f"Polytope({self.name!r}, V={self.n_vertices}, E={self.n_edges}, F={self.n_faces})"


def polytope_from_dict(data: Dict, name: Optional[str] = None) -> Polytope:
    try:
        vertices, faces = data["vertices"], data["faces"]
    except (KeyError, TypeError) as e:
        raise PolytopeParseError(f"polytope data must contain 'vertices' and 'faces': {e}") from e
    return Polytope(vertices, faces, name=name or data.get("name", "polytope"))


def load_polytope(path: str) -> Polytope:
    """
    Load a polytope from a JSON file {"vertices": [[x,y,z],...], "faces": [[i0,i1,...],...]}.

    Raises:
        PolytopeParseError: malformed file
        OpenBoundaryError: some edge is not shared by exactly two faces
        DegenerateFaceError: a face has zero area
    """
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise PolytopeParseError(f"{path}: invalid JSON ({e})") from e
    default_name = path.replace("\\", "/").rsplit("/", 1)[-1].rsplit(".", 1)[0]
    return polytope_from_dict(data, name=data.get("name", default_name) if isinstance(data, dict) else None)
