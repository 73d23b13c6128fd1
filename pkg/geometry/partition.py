#!/usr/bin/env python
"""
Neighborhood partition of a polytope: vertex, edge, face, mixed and interior
regions selected by distances and relative distances to the boundary features.

`region_test` is the single definition of every region; classification,
covering truncation and neighborhood quadrature all go through it.
"""

import logging
from typing import Dict, FrozenSet, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from errors import DomainError
from geometry.polytope import FeatureDistances, Polytope
from utils import make_rng

logger = logging.getLogger(__name__)

NeighborhoodKind = Literal["v", "e", "f", "ve", "vf", "ef", "vef", "int"]

KIND_FEATURES: Dict[str, Tuple[str, ...]] = {
    "v": ("vertex",),
    "e": ("edge",),
    "f": ("face",),
    "ve": ("vertex", "edge"),
    "vf": ("vertex", "face"),
    "ef": ("edge", "face"),
    "vef": ("vertex", "edge", "face"),
    "int": (),
}

# Power of ξ in the outer threshold of each region (r_v < ξ, r_e < ξ², r_f < ξ³)
KIND_ORDER: Dict[str, int] = {"v": 1, "ve": 1, "vf": 1, "vef": 1, "e": 2, "ef": 2, "f": 3, "int": 0}

VERTEX_KINDS = ("v", "ve", "vf", "vef")


class NeighborhoodSpec(BaseModel):
    """One region of the partition together with the features it abuts."""
    model_config = ConfigDict(frozen=True)

    kind: NeighborhoodKind
    xi: float = Field(gt=0.0, lt=1.0)
    vertex: Optional[int] = None
    edge: Optional[int] = None
    face: Optional[int] = None

    @model_validator(mode="after")
    def _check_features(self) -> "NeighborhoodSpec":
        needed = KIND_FEATURES[self.kind]
        for name in ("vertex", "edge", "face"):
            if (getattr(self, name) is not None) != (name in needed):
                raise ValueError(f"region kind '{self.kind}' requires features {needed}, got {name}={getattr(self, name)}")
        return self

    @property
    def label(self) -> str:
        refs = [f"{n[0]}{getattr(self, n)}" for n in ("vertex", "edge", "face") if getattr(self, n) is not None]
        return self.kind if not refs else f"{self.kind}[{','.join(refs)}]"

    @property
    def singular_feature(self) -> Tuple[str, Optional[int]]:
        """The feature the region's dyadic structure refines toward."""
        if self.kind in VERTEX_KINDS:
            return "vertex", self.vertex
        if self.kind in ("e", "ef"):
            return "edge", self.edge
        if self.kind == "f":
            return "face", self.face
        return "none", None

    def outer_radius(self, P: Polytope) -> float:
        """Outer threshold of the singular distance: L·ξ^k with k = 1, 2, 3 for vertex, edge, face regions."""
        return P.length_scale * self.xi ** KIND_ORDER[self.kind]

    def check_features(self, P: Polytope) -> None:
        """
        Raises:
            DomainError: if the referenced features do not exist or are not incident
        """
        if self.vertex is not None and not 0 <= self.vertex < P.n_vertices:
            raise DomainError(f"vertex {self.vertex} not in {P.name}")
        if self.edge is not None and not 0 <= self.edge < P.n_edges:
            raise DomainError(f"edge {self.edge} not in {P.name}")
        if self.face is not None and not 0 <= self.face < P.n_faces:
            raise DomainError(f"face {self.face} not in {P.name}")
        if self.vertex is not None and self.edge is not None and self.edge not in P.E_v[self.vertex]:
            raise DomainError(f"edge {self.edge} does not end at vertex {self.vertex}")
        if self.edge is not None and self.face is not None and self.face not in P.F_e[self.edge]:
            raise DomainError(f"face {self.face} does not contain edge {self.edge}")
        if self.vertex is not None and self.face is not None and self.face not in P.F_v[self.vertex]:
            raise DomainError(f"face {self.face} does not contain vertex {self.vertex}")


class Frame(BaseModel):
    """
    Orthonormal directions (g_⊥, g_⊨, g_∥) of a region.

    Right-handed means g_⊥ = g_∥ × g_⊨.
    """
    model_config = ConfigDict(frozen=True)

    g_perp: Tuple[float, float, float]
    g_parperp: Tuple[float, float, float]
    g_par: Tuple[float, float, float]

    @model_validator(mode="after")
    def _check_orthonormal(self) -> "Frame":
        M = self.matrix()
        if np.max(np.abs(M @ M.T - np.eye(3))) > 1e-12:
            raise ValueError("frame vectors must be orthonormal")
        if abs(np.linalg.det(M[::-1]) - 1.0) > 1e-10:
            raise ValueError("frame must be right-handed")
        return self

    def matrix(self) -> np.ndarray:
        """Rows g_⊥, g_⊨, g_∥."""
        return np.array([self.g_perp, self.g_parperp, self.g_par], dtype=float)

    def directions(self, beta: Tuple[int, int, int]) -> List[np.ndarray]:
        """Directions of the iterated derivative D^β = D_⊥^{β_⊥} D_⊨^{β_⊨} D_∥^{β_∥}."""
        M = self.matrix()
        return [M[0]] * beta[0] + [M[1]] * beta[1] + [M[2]] * beta[2]

    @staticmethod
    def from_vectors(g_perp, g_par) -> "Frame":
        g_perp = np.asarray(g_perp, dtype=float)
        g_par = np.asarray(g_par, dtype=float)
        g_perp = g_perp / np.linalg.norm(g_perp)
        g_par = g_par - (g_par @ g_perp) * g_perp
        g_par = g_par / np.linalg.norm(g_par)
        g_parperp = np.cross(g_perp, g_par)
        return Frame(g_perp=tuple(g_perp), g_parperp=tuple(g_parperp), g_par=tuple(g_par))


CANONICAL_FRAME = Frame(g_perp=(0.0, 0.0, 1.0), g_parperp=(0.0, 1.0, 0.0), g_par=(1.0, 0.0, 0.0))


def frame_for(P: Polytope, spec: NeighborhoodSpec) -> Frame:
    """
    Frame of a region: g_∥ along the abutted edge, g_⊥ normal to the abutted face.

    Regions without an edge take g_∥ along the face's first edge; regions without
    any edge or face use the canonical axes.
    """
    spec.check_features(P)
    if spec.kind in ("int", "v"):
        return CANONICAL_FRAME
    if spec.kind in ("f", "vf"):
        f = spec.face
        return Frame.from_vectors(P.inward_normal(f), P.face_u[f])
    e = spec.edge
    f = spec.face if spec.face is not None else P.F_e[e][0]
    return Frame.from_vectors(P.inward_normal(f), P.edge_directions[e])


# ---------------------------------------------------------------------- region tests

def _bounds(values: np.ndarray, slack: Optional[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    if slack is None:
        return values, values
    return np.maximum(values - slack, 0.0), values + slack


def region_test(P: Polytope, spec: NeighborhoodSpec, dist: FeatureDistances,
                slack: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Evaluate the defining inequalities of a region.

    Without slack this is exact membership. With slack (per-point radius) it
    answers whether some point within that radius could belong to the region:
    every distance is 1-Lipschitz, so each inequality is tested on intervals.

    Args:
        P: Polytope
        spec: Region
        dist: Distances of the test points (or ball centers)
        slack: Optional radii of balls around the test points

    Returns:
        Boolean mask
    """
    xi, L = spec.xi, P.length_scale
    s = None if slack is None else np.asarray(slack, dtype=float)
    V = lambda v: _bounds(dist.r_v[:, v], s)
    E = lambda e: _bounds(dist.r_e[:, e], s)
    F = lambda f: _bounds(dist.r_f[:, f], s)
    const = lambda c: (c, c)

    def lt(a, b, k):
        # a < k b for some admissible values
        return a[0] < k * b[1]

    def ge(a, b, k):
        return a[1] >= k * b[0]

    n = len(dist.r_bnd)
    mask = np.ones(n, dtype=bool)
    kind = spec.kind
    v, e, f = spec.vertex, spec.edge, spec.face

    if kind in VERTEX_KINDS:
        mask &= lt(V(v), const(L), xi)
        if kind == "v":
            for g in P.E_v[v]:
                mask &= ge(E(g), V(v), xi)
            # each face is far relative to at least one of its edges at v,
            # the exact complement of the vf condition below
            for h in P.F_v[v]:
                far = np.zeros(n, dtype=bool)
                for g in P.E_v[v]:
                    if g in P.E_f[h]:
                        far |= ge(F(h), E(g), xi)
                mask &= far
        elif kind == "ve":
            mask &= lt(E(e), V(v), xi)
            for h in P.F_e[e]:
                mask &= ge(F(h), E(e), xi)
        elif kind == "vef":
            mask &= lt(E(e), V(v), xi) & lt(F(f), E(e), xi)
        else:
            for g in P.E_v[v]:
                if g in P.E_f[f]:
                    mask &= ge(E(g), V(v), xi) & lt(F(f), E(g), xi)
    elif kind in ("e", "ef"):
        for u in P.V_e[e]:
            mask &= ge(V(u), const(L), xi)
        mask &= lt(E(e), const(L), xi ** 2)
        if kind == "ef":
            mask &= lt(F(f), E(e), xi)
        else:
            for h in P.F_e[e]:
                mask &= ge(F(h), E(e), xi)
    elif kind == "f":
        for u in P.V_f[f]:
            mask &= ge(V(u), const(L), xi)
        for g in P.E_f[f]:
            mask &= ge(E(g), const(L), xi ** 2)
        mask &= lt(F(f), const(L), xi ** 3)
    else:
        for u in range(P.n_vertices):
            mask &= ge(V(u), const(L), xi)
        for g in range(P.n_edges):
            mask &= ge(E(g), const(L), xi ** 2)
        for h in range(P.n_faces):
            mask &= ge(F(h), const(L), xi ** 3)
    return mask


def region_mask(P: Polytope, spec: NeighborhoodSpec, points) -> np.ndarray:
    """Exact membership of points in the region (points assumed inside Ω)."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    return region_test(P, spec, P.distances(X))


def all_specs(P: Polytope, xi: float) -> List[NeighborhoodSpec]:
    """Every region of the partition for this polytope and ξ."""
    specs = []
    for v in range(P.n_vertices):
        specs.append(NeighborhoodSpec(kind="v", xi=xi, vertex=v))
        for e in P.E_v[v]:
            specs.append(NeighborhoodSpec(kind="ve", xi=xi, vertex=v, edge=e))
            for f in P.F_e[e]:
                specs.append(NeighborhoodSpec(kind="vef", xi=xi, vertex=v, edge=e, face=f))
        for f in P.F_v[v]:
            specs.append(NeighborhoodSpec(kind="vf", xi=xi, vertex=v, face=f))
    for e in range(P.n_edges):
        specs.append(NeighborhoodSpec(kind="e", xi=xi, edge=e))
        for f in P.F_e[e]:
            specs.append(NeighborhoodSpec(kind="ef", xi=xi, edge=e, face=f))
    for f in range(P.n_faces):
        specs.append(NeighborhoodSpec(kind="f", xi=xi, face=f))
    specs.append(NeighborhoodSpec(kind="int", xi=xi))
    return specs


def classify_batch(P: Polytope, points, xi: float,
                   dist: Optional[FeatureDistances] = None) -> Dict[NeighborhoodSpec, np.ndarray]:
    """Membership masks of every region for a batch of interior points."""
    P.check_xi(xi)
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if dist is None:
        dist = P.distances(X)
    return {spec: region_test(P, spec, dist) for spec in all_specs(P, xi)}


def classify(P: Polytope, x, xi: float) -> FrozenSet[NeighborhoodSpec]:
    """
    All regions containing a single interior point.

    Raises:
        ConfigurationError: ξ too large for the polytope
        DomainError: x outside Ω
    """
    P.check_xi(xi)
    X = np.asarray(x, dtype=float).reshape(1, 3)
    dist = P.distances(X, check_domain=True)
    masks = classify_batch(P, X, xi, dist=dist)
    return frozenset(spec for spec, m in masks.items() if m[0])


def features_in_range(P: Polytope, spec: NeighborhoodSpec, dist: FeatureDistances, row: int) -> Dict[str, Optional[List[int]]]:
    """
    Features of each type that a region sample sees within the region's own reach.

    Vertices are looked for within ξL. Edges within ξ·r_v near a vertex and
    within ξ²L otherwise. Faces within ξ·r_e when the region abuts an edge and
    within ξ³L otherwise; for v and vf regions no face reach is defined.
    """
    xi, L = spec.xi, P.length_scale
    rv, re, rf = dist.r_v[row], dist.r_e[row], dist.r_f[row]
    edge_reach = xi * rv[spec.vertex] if spec.kind in VERTEX_KINDS else xi ** 2 * L
    if spec.edge is not None:
        face_reach = xi * re[spec.edge]
    elif spec.kind in ("f", "int"):
        face_reach = xi ** 3 * L
    else:
        face_reach = None
    return {
        "vertex": [int(k) for k in np.flatnonzero(rv < xi * L)],
        "edge": [int(k) for k in np.flatnonzero(re < edge_reach)],
        "face": None if face_reach is None else [int(k) for k in np.flatnonzero(rf < face_reach)],
    }


def expected_features(spec: NeighborhoodSpec) -> Dict[str, Optional[List[int]]]:
    """What features_in_range must return on every sample of the region."""
    vertex = [spec.vertex] if spec.kind in VERTEX_KINDS else []
    edge = [spec.edge] if spec.kind in ("ve", "vef", "e", "ef") else []
    if spec.kind in ("v", "vf"):
        face = None
    elif spec.kind in ("vef", "ef", "f"):
        face = [spec.face]
    else:
        face = []
    return {"vertex": vertex, "edge": edge, "face": face}


# ---------------------------------------------------------------------- Monte-Carlo summaries

class ClassificationHistogram(BaseModel):
    """Sample counts per region kind for one polytope and ξ."""
    polytope: str
    xi: float
    samples: int
    counts: Dict[str, int]
    uncovered: int
    feature_mismatches: int
    max_memberships: int


def classification_histogram(P: Polytope, xi: float, samples: int, seed: int = 0,
                             chunk: int = 20000) -> ClassificationHistogram:
    """
    Classify uniform interior samples and count them per region kind.

    Every sample must land in at least one region (uncovered counts those that
    do not) and every region sample must see exactly the features of its
    region (feature_mismatches counts the others).
    """
    P.check_xi(xi)
    rng = make_rng(seed, f"partition:{P.name}:{xi!r}")
    X = P.sample_interior(samples, rng)
    counts = {kind: 0 for kind in KIND_FEATURES}
    uncovered = mismatches = most = 0
    for start in range(0, len(X), chunk):
        Xc = X[start:start + chunk]
        dist = P.distances(Xc)
        masks = classify_batch(P, Xc, xi, dist=dist)
        memberships = np.zeros(len(Xc), dtype=np.int64)
        for spec, mask in masks.items():
            memberships += mask
            counts[spec.kind] += int(np.count_nonzero(mask))
            expected = expected_features(spec)
            for row in np.flatnonzero(mask):
                if features_in_range(P, spec, dist, int(row)) != expected:
                    mismatches += 1
        uncovered += int(np.count_nonzero(memberships == 0))
        most = max(most, int(memberships.max(initial=0)))
    if uncovered:
        logger.warning(f"{uncovered} of {samples} samples of {P.name} are in no region for xi={xi}")
    return ClassificationHistogram(polytope=P.name, xi=xi, samples=samples, counts=counts, uncovered=uncovered,
                                   feature_mismatches=mismatches, max_memberships=most)


def feature_equivalence_constants(P: Polytope, xi: float, samples: int, seed: int = 0) -> Dict[str, Dict[str, float]]:
    """
    Empirical constants of r_f ≲ r_e ≲ r_v on the samples of each region kind,
    measured against the features the region abuts.

    Returns:
        {kind: {"r_e/r_v": max, "r_f/r_e": max, "r_f/r_v": max}}; ratios that
        a kind does not define are omitted
    """
    P.check_xi(xi)
    X = P.sample_interior(samples, make_rng(seed, f"equivalence:{P.name}:{xi!r}"))
    dist = P.distances(X)
    constants: Dict[str, Dict[str, float]] = {}
    for spec, mask in classify_batch(P, X, xi, dist=dist).items():
        if not np.any(mask):
            continue
        r = {}
        if spec.vertex is not None:
            r["v"] = dist.r_v[mask, spec.vertex]
        if spec.edge is not None:
            r["e"] = dist.r_e[mask, spec.edge]
        if spec.face is not None:
            r["f"] = dist.r_f[mask, spec.face]
        entry = constants.setdefault(spec.kind, {})
        for num, den in (("e", "v"), ("f", "e"), ("f", "v")):
            if num in r and den in r:
                key = f"r_{num}/r_{den}"
                entry[key] = max(entry.get(key, 0.0), float(np.max(r[num] / r[den])))
    return constants
