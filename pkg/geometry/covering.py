#!/usr/bin/env python
"""
Coverings of the singular neighborhoods by balls, half-balls and wedges.

Vertex, edge and face regions are covered by balls inscribed in Ω. Edge-face
and vertex-face regions are covered by half-balls centered on the face, and
vertex-edge and vertex-edge-face regions by wedges centered on the edge.
Every element has radius R = c·δ(center) where δ is the distance from the
center to the boundary features its enlarged ĉ-ball must not reach.

Generation 0 covers the dyadic shell r0/2 ≤ r_S < r0 of the singular distance
r_S. Generation k is generation 0 scaled by 2^-k about the anchor of the region
(the vertex, the edge midpoint or a face point), so all generations are
exactly self-similar and the overlap count does not depend on the depth.

Edge and face regions are not self-similar about a single point, so their
coverings are tilings: generation 0 covers one tile of width T = TILE_PERIOD·r0
around the anchor, and every element of generation k stands for its
translates by multiples of 2^-k·T along the edge (or both in-plane axes of the
face), over the whole feature. Membership queries reduce a point modulo the
period instead of enumerating the translates.
"""

import logging
from itertools import product
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import orjson
import shapely
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.spatial import cKDTree

from config import COVER_C, COVER_CHAT, COVER_DEPTH, MC_BUDGET, ROOT_SEED
from errors import ConfigurationError, DomainError
from geometry.charts import NeighborhoodChart
from geometry.partition import NeighborhoodSpec, region_test
from geometry.polytope import FeatureDistances, Polytope
from utils import make_rng

logger = logging.getLogger(__name__)

ShapeName = Literal["ball", "half_ball", "wedge"]

SHAPE_OF: Dict[str, str] = {
    "v": "ball", "e": "ball", "f": "ball",
    "ef": "half_ball", "vf": "half_ball",
    "ve": "wedge", "vef": "wedge",
}

TILED_KINDS = ("e", "ef", "f")
# Tile width of edge and face coverings in units of r0
TILE_PERIOD = 2.0
BALL_LEAF = 0.9
COLUMN_LEAF = 0.95
MAX_LEVEL = 16
PROBES = 20000
PATCH_ROUNDS = 3
SAMPLE_CHUNK = 20000


class CoveringElement(BaseModel):
    """One ball, half-ball or wedge of a covering."""
    model_config = ConfigDict(frozen=True)

    shape: ShapeName
    center: Tuple[float, float, float]
    radius: float = Field(gt=0.0)
    c: float = Field(gt=0.0, lt=1.0)
    chat: float = Field(gt=0.0, lt=1.0)
    generation: int = Field(default=0, ge=0)
    theta: Optional[float] = Field(default=None, gt=0.0)
    # translates center + Σ j_i·periods[i] for copies[i][0] ≤ j_i ≤ copies[i][1]
    periods: Tuple[Tuple[float, float, float], ...] = ()
    copies: Tuple[Tuple[int, int], ...] = ()

    @model_validator(mode="after")
    def _check_scales(self) -> "CoveringElement":
        if not self.c < self.chat:
            raise ValueError(f"scale factors must satisfy c < chat, got c={self.c}, chat={self.chat}")
        if len(self.periods) != len(self.copies):
            raise ValueError("every period needs a copy range")
        return self

    @property
    def n_copies(self) -> int:
        return int(np.prod([hi - lo + 1 for lo, hi in self.copies])) if self.copies else 1

    @property
    def delta(self) -> float:
        """Feature distance the radius is proportional to."""
        return self.radius / self.c

    @property
    def enlarged_radius(self) -> float:
        return self.chat * self.delta

    def to_record(self) -> Dict:
        record = {"shape": self.shape, "center": list(self.center), "R": self.radius,
                  "c": self.c, "chat": self.chat, "generation": self.generation}
        if self.periods:
            record["periods"] = [list(p) for p in self.periods]
            record["copies"] = [list(r) for r in self.copies]
        return record


class OverlapCertificate(BaseModel):
    """Empirical covering and finite-overlap certificate."""
    n_emp: int
    samples: int
    evaluated: int
    instances: int
    histogram: Dict[int, int]
    coverage: float
    uncovered: int
    c_b: List[float]
    invalid_elements: int
    excluded_radius: float


# ---------------------------------------------------------------------- per-kind distances

def singular_distance(P: Polytope, spec: NeighborhoodSpec, dist: FeatureDistances) -> np.ndarray:
    kind, idx = spec.singular_feature
    if kind == "vertex":
        return dist.r_v[:, idx]
    if kind == "edge":
        return dist.r_e[:, idx]
    if kind == "face":
        return dist.r_f[:, idx]
    raise ConfigurationError("the interior region has no singular feature", key="kind")


def support_distance(P: Polytope, spec: NeighborhoodSpec, dist: FeatureDistances) -> np.ndarray:
    """
    δ of the region's element shape.

    Balls keep clear of all of ∂Ω. Half-balls may touch their face and wedges
    the two faces at their edge; everything else must stay out of the ĉ-ball.
    """
    shape = SHAPE_OF[spec.kind]
    if shape == "ball":
        return dist.r_bnd
    if shape == "half_ball":
        others = [g for g in range(P.n_faces) if g != spec.face]
        return np.minimum(singular_distance(P, spec, dist), dist.r_f[:, others].min(axis=1))
    others = [g for g in range(P.n_faces) if g not in P.F_e[spec.edge]]
    return np.minimum(dist.r_v[:, spec.vertex], dist.r_f[:, others].min(axis=1))


def column_reference(P: Polytope, spec: NeighborhoodSpec, dist: FeatureDistances) -> np.ndarray:
    """
    Distance m with region points lying within ξ·m of the element support.

    On ω_ef the height above f is below ξ·r_e, on ω_vf below ξ·min r_e over the
    edges of f at v, and on wedge regions the distance to e is below ξ·r_v.
    """
    if spec.kind == "ef":
        return dist.r_e[:, spec.edge]
    if spec.kind == "vf":
        shared = [g for g in P.E_v[spec.vertex] if g in P.E_f[spec.face]]
        return dist.r_e[:, shared].min(axis=1)
    return dist.r_v[:, spec.vertex]


def _shape_factor(P: Polytope, spec: NeighborhoodSpec, rng: np.random.Generator) -> float:
    """Smallest δ/m over support points of the first shell; 1 when the dihedral angles are not acute."""
    r0 = spec.outer_radius(P)
    shape = SHAPE_OF[spec.kind]
    if shape == "wedge":
        t = np.linspace(0.5 * r0, r0, 65)
        q = P.vertices[spec.vertex] + t[:, None] * P.edge_direction_from(spec.edge, spec.vertex)
    else:
        f = spec.face
        if spec.kind == "ef":
            center = P.face_coordinates(f, P.edge_midpoint(spec.edge))[0]
            half = TILE_PERIOD * r0
        else:
            center = P.face_coordinates(f, P.vertices[spec.vertex])[0]
            half = r0
        xy = center + rng.uniform(-half, half, size=(4000, 2))
        xy = xy[shapely.contains_xy(P.face_polygons[f], xy[:, 0], xy[:, 1])]
        q = P.face_point(f, xy)
    if len(q) == 0:
        return 1.0
    dist = P.distances(q)
    r_s = singular_distance(P, spec, dist)
    m = column_reference(P, spec, dist)
    keep = (r_s >= 0.5 * r0) & (r_s < r0) & (m > 1e-9 * r0)
    if not np.any(keep):
        return 1.0
    ratio = support_distance(P, spec, dist)[keep] / m[keep]
    return float(min(1.0, ratio.min()))


def check_admissible(P: Polytope, spec: NeighborhoodSpec, c: float, chat: float) -> None:
    """
    Raises:
        ConfigurationError: (c, ĉ) out of order, ξ too large for the polytope, or a
            half-ball / wedge of this region would reach a second feature
        DomainError: the neighborhood references features that do not exist
    """
    if not 0.0 < c < 1.0:
        raise ConfigurationError(f"c={c} must lie in (0, 1)", key="c")
    if not c < chat < 1.0:
        raise ConfigurationError(f"chat={chat} must lie in (c, 1) with c={c}", key="chat")
    if spec.kind == "int":
        raise ConfigurationError("the interior region has no singular feature to cover", key="kind")
    spec.check_features(P)
    P.check_xi(spec.xi)
    if SHAPE_OF[spec.kind] == "ball":
        return
    factor = _shape_factor(P, spec, make_rng(ROOT_SEED, f"shape-factor:{spec.label}"))
    xi = spec.xi
    if xi / (1.0 - xi) >= 0.9 * c * factor:
        limit = 0.9 * c * factor / (1.0 + 0.9 * c * factor)
        raise ConfigurationError(
            f"{SHAPE_OF[spec.kind]} elements of {spec.label} with c={c} would reach a second feature; "
            f"need xi < {limit:.6g}", key="xi")


# ---------------------------------------------------------------------- covering

class Covering:
    """
    Elements of a covering stored as arrays, generation-major.

    For edge and face regions the rows are the elements of one tile per
    generation; each row also stands for its translates (see `copy_range`).

    Attributes:
        P: Polytope
        spec: Target region
        c, chat: Scale factors of the elements and of their enlargements
        depth: Number of generations
        centers: Element centers, shape (N, 3)
        deltas: Feature distances δ of the centers, radii are c·δ
        generations: Generation of each element
        anchor: Point the generations contract to
        r0: Outer singular distance of the first shell
        tiled: Whether rows stand for translates along the feature
        period: Tile width T of generation 0 (None when not tiled)
        tile_axes: Unit translation directions, shape (m, 3) with m = 0, 1 or 2
        tile_extent: Range of the feature along each axis relative to the anchor, shape (m, 2)
    """

    def __init__(self, P: Polytope, spec: NeighborhoodSpec, c: float, chat: float, depth: int,
                 centers: np.ndarray, deltas: np.ndarray, generations: np.ndarray):
        if spec.kind == "int":
            raise ConfigurationError("the interior region has no singular feature to cover", key="kind")
        self.P = P
        self.spec = spec
        self.c = float(c)
        self.chat = float(chat)
        self.depth = int(depth)
        self.shape: str = SHAPE_OF[spec.kind]
        self.centers = np.asarray(centers, dtype=float).reshape(-1, 3)
        self.deltas = np.asarray(deltas, dtype=float).ravel()
        self.generations = np.asarray(generations, dtype=int).ravel()
        self.r0 = spec.outer_radius(P)
        self.chart = NeighborhoodChart(P, spec)
        self.anchor = self.chart.focus
        self.tiled = spec.kind in TILED_KINDS
        self.period: Optional[float] = TILE_PERIOD * self.r0 if self.tiled else None
        self.tile_chart = NeighborhoodChart(P, spec, window=0.5 * self.period) if self.tiled else self.chart
        self.tile_axes, self.tile_extent = self._tile_frame()
        self.certificate: Optional[OverlapCertificate] = None

    def _tile_frame(self) -> Tuple[np.ndarray, np.ndarray]:
        P, spec = self.P, self.spec
        if not self.tiled:
            return np.zeros((0, 3)), np.zeros((0, 2))
        if spec.kind in ("e", "ef"):
            half = 0.5 * P.edge_lengths[spec.edge]
            return P.edge_directions[spec.edge].reshape(1, 3), np.array([[-half, half]])
        f = spec.face
        cx, cy = self.chart.face_anchor_coordinates()
        minx, miny, maxx, maxy = P.face_polygons[f].bounds
        return (np.array([P.face_u[f], P.face_w[f]]),
                np.array([[minx - cx, maxx - cx], [miny - cy, maxy - cy]]))

    @classmethod
    def from_elements(cls, P: Polytope, spec: NeighborhoodSpec, elements: List[CoveringElement],
                      depth: Optional[int] = None) -> "Covering":
        """Covering with hand-picked elements (all with the same c, ĉ); translates are implied by the region."""
        if not elements:
            raise ConfigurationError("a covering needs at least one element", key="elements")
        c, chat = elements[0].c, elements[0].chat
        if any(el.c != c or el.chat != chat for el in elements):
            raise ConfigurationError("all elements of a covering share (c, chat)", key="elements")
        gens = np.array([el.generation for el in elements])
        return cls(P, spec, c, chat, depth if depth is not None else int(gens.max()) + 1,
                   np.array([el.center for el in elements]),
                   np.array([el.delta for el in elements]), gens)

    def __len__(self) -> int:
        return len(self.deltas)

    @property
    def radii(self) -> np.ndarray:
        return self.c * self.deltas

    @property
    def excluded_radius(self) -> float:
        """Singular distance below which the truncated region is not covered."""
        return self.r0 * 2.0 ** (-self.depth)

    # ------------------------------------------------------------------ tiles

    def tile_coordinates(self, X: np.ndarray) -> np.ndarray:
        """Offsets of points from the anchor along the tile axes, shape (N, m)."""
        return (np.atleast_2d(X) - self.anchor) @ self.tile_axes.T

    def _tile_reach(self, k: int) -> Tuple[float, float, float]:
        """Tile width, largest center offset and largest enlarged radius of generation k."""
        members = self.generations == k
        T = self.period * 2.0 ** (-k)
        if not np.any(members):
            return T, 0.0, 0.0
        W = float(np.abs(self.tile_coordinates(self.centers[members])).max())
        return T, W, float(self.chat * self.deltas[members].max())

    def copy_range(self, k: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Inclusive bounds of the translate indices of generation k along each tile axis.

        Translates reach every point of the feature's extent; those beyond it
        meet no point of the region.
        """
        if not self.tiled:
            return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
        T, W, reach = self._tile_reach(k)
        lo = np.floor((self.tile_extent[:, 0] - W - reach) / T).astype(int)
        hi = np.ceil((self.tile_extent[:, 1] + W + reach) / T).astype(int)
        return lo, hi

    @property
    def n_instances(self) -> int:
        """Number of elements including every translate."""
        total = 0
        for k in range(self.depth):
            n = int(np.count_nonzero(self.generations == k))
            lo, hi = self.copy_range(k)
            total += n * int(np.prod(hi - lo + 1))
        return total

    @property
    def elements(self) -> List[CoveringElement]:
        """The stored rows; for tiled coverings each carries its periods and copy ranges."""
        tiles = {}
        for k in np.unique(self.generations):
            if self.tiled:
                lo, hi = self.copy_range(int(k))
                T = self.period * 2.0 ** (-int(k))
                tiles[int(k)] = (tuple(tuple(float(a) for a in T * axis) for axis in self.tile_axes),
                                 tuple((int(a), int(b)) for a, b in zip(lo, hi)))
            else:
                tiles[int(k)] = ((), ())
        return [
            CoveringElement(shape=self.shape, center=tuple(x), radius=float(self.c * d), c=self.c,
                            chat=self.chat, generation=int(g), periods=tiles[int(g)][0], copies=tiles[int(g)][1])
            for x, d, g in zip(self.centers.tolist(), self.deltas, self.generations)
        ]

    # ------------------------------------------------------------------ target region

    def target_mask(self, X: np.ndarray, generation: Optional[int] = None,
                    dist: Optional[FeatureDistances] = None) -> np.ndarray:
        """
        Membership in the truncated target region, or in one generation's shell.

        The target is Ω ∩ ω ∩ {excluded ≤ r_S < r0}.
        """
        X = np.atleast_2d(X)
        if dist is None:
            dist = self.P.distances(X)
        r_s = singular_distance(self.P, self.spec, dist)
        if generation is None:
            lo, hi = self.excluded_radius, self.r0
        else:
            hi = self.r0 * 2.0 ** (-generation)
            lo = 0.5 * hi
        mask = (r_s >= lo) & (r_s < hi) & region_test(self.P, self.spec, dist)
        return mask & self.P.contains(X, distances=dist.r_bnd)

    def tile_mask(self, X: np.ndarray, generation: int = 0) -> np.ndarray:
        """Points of the tile of one generation (every point when not tiled)."""
        X = np.atleast_2d(X)
        if not self.tiled:
            return np.ones(len(X), dtype=bool)
        half = 0.5 * self.period * 2.0 ** (-generation)
        return np.all(np.abs(self.tile_coordinates(X)) <= half, axis=1)

    def base_samples(self, n: int, rng: np.random.Generator, tile: bool = False,
                     max_batches: int = 400) -> np.ndarray:
        """
        Uniform samples of the first generation's shell of the target, or of its tile only.

        Raises:
            DomainError: the shell is empty (or too thin to sample)
        """
        chart = self.tile_chart if tile else self.chart
        accepted: List[np.ndarray] = []
        count = 0
        for _ in range(max_batches):
            batch = chart.sample(max(4 * (n - count), 1024), rng, 0.5 * self.r0, self.r0)
            keep = self.target_mask(batch, generation=0)
            if tile:
                keep &= self.tile_mask(batch)
            accepted.append(batch[keep])
            count += int(np.count_nonzero(keep))
            if count >= n:
                return np.concatenate(accepted)[:n]
        if count == 0:
            raise DomainError(f"target {self.spec.label} has an empty first shell")
        logger.warning(f"Only {count} of {n} base samples drawn for {self.spec.label}")
        return np.concatenate(accepted)

    def scaled_samples(self, X0: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Copies of first-shell samples in every generation's shell, with their generation.

        Around a vertex a sample is scaled by 2^-k about the anchor. Along an
        edge or face its offset within the tile is scaled and placed in the
        generation-k tile nearest to the sample, so the copies stay spread over
        the whole feature and meet the tiling exactly as the sample does.
        """
        parts, gens = [], []
        rel = X0 - self.anchor
        if self.tiled:
            s = rel @ self.tile_axes.T
            normal = rel - s @ self.tile_axes
            s_tile = s - self.period * np.rint(s / self.period)
        for k in range(self.depth):
            scale = 2.0 ** (-k)
            if self.tiled:
                T = self.period * scale
                s_k = T * np.rint(s / T) + s_tile * scale
                Xk = self.anchor + s_k @ self.tile_axes + normal * scale
            else:
                Xk = self.anchor + rel * scale
            Xk = Xk[self.target_mask(Xk, generation=k)]
            parts.append(Xk)
            gens.append(np.full(len(Xk), k))
        return np.concatenate(parts), np.concatenate(gens)

    # ------------------------------------------------------------------ membership

    def _query(self, points: np.ndarray, members: np.ndarray,
               max_reach: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(point position, element, distance) for points inside the ĉ-ball of a member element."""
        out_i, out_j, out_d = [], [], []
        tree_e = cKDTree(self.centers[members])
        for start in range(0, len(points), SAMPLE_CHUNK):
            chunk = np.arange(start, min(start + SAMPLE_CHUNK, len(points)))
            tree_s = cKDTree(points[chunk])
            M = tree_s.sparse_distance_matrix(tree_e, max_distance=max_reach, output_type="ndarray")
            if len(M) == 0:
                continue
            j = members[M["j"]]
            inside = M["v"] < self.chat * self.deltas[j]
            out_i.append(chunk[M["i"][inside]])
            out_j.append(j[inside])
            out_d.append(M["v"][inside])
        if not out_i:
            empty = np.zeros(0, dtype=int)
            return empty, empty, np.zeros(0)
        return np.concatenate(out_i), np.concatenate(out_j), np.concatenate(out_d)

    def instance_pairs(self, X: np.ndarray, dist: Optional[FeatureDistances] = None
                       ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """
        All (sample, element instance) pairs with the sample inside the instance's ĉ-ball.

        Elements are bucketed by log2 δ (by generation when tiled); since δ is
        1-Lipschitz only buckets with δ within a factor (1 ± ĉ) of δ(x) can
        contain x.

        Returns:
            (sample indices, element indices, distances, translation of each instance)
        """
        X = np.atleast_2d(X)
        empty = np.zeros(0, dtype=int)
        if len(self) == 0 or len(X) == 0:
            return empty, empty, np.zeros(0), np.zeros((0, 3))
        if dist is None:
            dist = self.P.distances(X)
        dx = support_distance(self.P, self.spec, dist)
        slop = 1e-9
        out_i, out_j, out_d, out_t = [], [], [], []

        if not self.tiled:
            bins = np.floor(np.log2(self.deltas)).astype(int)
            for b in np.unique(bins):
                members = np.flatnonzero(bins == b)
                lo, hi = 2.0 ** b, 2.0 ** (b + 1)
                rows = np.flatnonzero((dx > (1.0 - self.chat) * lo * (1 - slop))
                                      & (dx < (1.0 + self.chat) * hi * (1 + slop)))
                if len(rows) == 0:
                    continue
                i, j, d = self._query(X[rows], members, self.chat * hi)
                out_i.append(rows[i])
                out_j.append(j)
                out_d.append(d)
                out_t.append(np.zeros((len(i), 3)))
        else:
            m = len(self.tile_axes)
            for k in np.unique(self.generations):
                members = np.flatnonzero(self.generations == k)
                d_lo, d_hi = self.deltas[members].min(), self.deltas[members].max()
                rows = np.flatnonzero((dx > (1.0 - self.chat) * d_lo * (1 - slop))
                                      & (dx < (1.0 + self.chat) * d_hi * (1 + slop)))
                if len(rows) == 0:
                    continue
                T, W, reach = self._tile_reach(int(k))
                lo, hi = self.copy_range(int(k))
                J = int(np.ceil((0.5 * T + W + reach) / T))
                s = self.tile_coordinates(X[rows])
                nearest = np.rint(s / T).astype(int)
                for offset in product(range(-J, J + 1), repeat=m):
                    copies = nearest + np.array(offset, dtype=int)
                    ok = np.all((copies >= lo) & (copies <= hi), axis=1)
                    ok &= np.all(np.abs(s - copies * T) <= W + reach, axis=1)
                    if not np.any(ok):
                        continue
                    sel = rows[ok]
                    shift = (copies[ok] * T) @ self.tile_axes
                    i, j, d = self._query(X[sel] - shift, members, self.chat * d_hi * (1 + slop))
                    out_i.append(sel[i])
                    out_j.append(j)
                    out_d.append(d)
                    out_t.append(shift[i])

        if not out_i:
            return empty, empty, np.zeros(0), np.zeros((0, 3))
        return (np.concatenate(out_i), np.concatenate(out_j), np.concatenate(out_d),
                np.concatenate(out_t))

    def pairs(self, X: np.ndarray, dist: Optional[FeatureDistances] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        All (sample, element) pairs with the sample inside the element's (or a translate's) ĉ-ball.

        Returns:
            (sample indices, element indices, distances)
        """
        i, j, d, _ = self.instance_pairs(X, dist)
        return i, j, d

    def overlap_counts(self, X: np.ndarray, dist: Optional[FeatureDistances] = None) -> np.ndarray:
        """Number of enlarged (ĉ-scaled) elements containing each point."""
        i, _, _ = self.pairs(X, dist)
        return np.bincount(i, minlength=len(np.atleast_2d(X)))

    def covered(self, X: np.ndarray, dist: Optional[FeatureDistances] = None) -> np.ndarray:
        """Whether each point lies in some element (radius c·δ)."""
        i, j, d = self.pairs(X, dist)
        hit = d < self.c * self.deltas[j]
        return np.bincount(i[hit], minlength=len(np.atleast_2d(X))) > 0

    def invalid_mask(self, centers: np.ndarray, deltas: np.ndarray) -> np.ndarray:
        """Elements violating their shape rule (centers off the support or enlarged ball meeting a foreign face)."""
        dist = self.P.distances(centers)
        tol = 1e-10 * max(1.0, self.P.diameter)
        allowed = support_distance(self.P, self.spec, dist)
        bad = ~(self.chat * deltas < allowed * (1 + 1e-12)) | (deltas <= 0)
        if self.shape == "ball":
            bad |= ~self.P.contains(centers, distances=dist.r_bnd) | (dist.r_bnd <= tol)
        elif self.shape == "half_ball":
            bad |= dist.r_f[:, self.spec.face] > tol
        else:
            bad |= dist.r_e[:, self.spec.edge] > tol
        return bad

    def invalid_elements(self) -> int:
        """Invalid stored rows."""
        return int(np.count_nonzero(self.invalid_mask(self.centers, self.deltas)))

    def generation_radii(self) -> List[np.ndarray]:
        return [self.radii[self.generations == k] for k in range(self.depth)]

    def __repr__(self) -> str:
        return f"Covering({self.spec.label}, {self.shape}, n={len(self)}, depth={self.depth})"


# ---------------------------------------------------------------------- generation 0

class _FirstGenerationBuilder:
    """Adaptive 2^dim-tree over the element support: 3D cells for balls, face cells for half-balls, edge cells for wedges."""

    def __init__(self, cov: Covering):
        self.cov = cov
        self.P = cov.P
        self.spec = cov.spec
        self.xi = cov.spec.xi
        self.dim = {"ball": 3, "half_ball": 2, "wedge": 1}[cov.shape]

    def _root(self) -> Tuple[np.ndarray, float]:
        P, spec, r0 = self.P, self.spec, self.cov.r0
        # the tile box |offset| ≤ T/2 and the shell fit in a cell of half-width T
        half = self.cov.period if self.cov.tiled else r0
        if self.dim == 3:
            return self.cov.anchor.reshape(1, 3), half
        if self.dim == 2:
            point = self.cov.anchor if self.cov.tiled else P.vertices[spec.vertex]
            return P.face_coordinates(spec.face, point), half
        i, _ = P.edges[spec.edge]
        t_v = 0.0 if spec.vertex == i else P.edge_lengths[spec.edge]
        return np.array([[t_v]]), half

    def _lift(self, C: np.ndarray, h: float):
        """Support points, test sphere centers and radii, δ at the support points, and the leaf bound."""
        P, spec = self.P, self.spec
        if self.dim == 3:
            rho = h * np.sqrt(3.0)
            dist = P.distances(C)
            delta = support_distance(P, spec, dist)
            on_support = P.contains(C, distances=dist.r_bnd)
            reach = np.full(len(C), rho)
            return C, C, reach, dist, delta, on_support, rho <= BALL_LEAF * self.cov.c * delta
        if self.dim == 2:
            f = spec.face
            q = P.face_point(f, C)
            rho = h * np.sqrt(2.0)
            on_support = shapely.contains_xy(P.face_polygons[f], C[:, 0], C[:, 1])
            up = P.inward_normal(f)
        else:
            e = spec.edge
            t = C[:, 0]
            q = P.edge_starts[e] + t[:, None] * P.edge_directions[e]
            rho = h
            on_support = (t >= 0.0) & (t <= P.edge_lengths[e])
            up = None
        dist_q = P.distances(q)
        delta = support_distance(P, spec, dist_q)
        hcol = self.xi / (1.0 - self.xi) * (column_reference(P, spec, dist_q) + rho)
        if up is None:
            T, reach = q, np.sqrt(rho ** 2 + hcol ** 2)
        else:
            T, reach = q + 0.5 * hcol[:, None] * up, np.sqrt(rho ** 2 + 0.25 * hcol ** 2)
        leaf = np.sqrt(rho ** 2 + hcol ** 2) <= COLUMN_LEAF * self.cov.c * delta
        return q, T, reach, P.distances(T), delta, on_support, leaf

    def _may_meet(self, T: np.ndarray, dist: FeatureDistances, reach: np.ndarray) -> np.ndarray:
        cov = self.cov
        r_s = singular_distance(self.P, self.spec, dist)
        keep = (r_s - reach < cov.r0) & (r_s + reach >= 0.5 * cov.r0)
        keep &= region_test(self.P, self.spec, dist, slack=reach)
        if cov.tiled:
            offset = np.abs(cov.tile_coordinates(T))
            keep &= np.all(offset - reach[:, None] <= 0.5 * cov.period, axis=1)
        if self.dim == 3:
            keep &= self.P.contains(T, distances=dist.r_bnd) | (dist.r_bnd <= reach)
        return keep

    def build(self) -> Tuple[np.ndarray, np.ndarray]:
        C, h = self._root()
        offsets = np.array(list(product((-1.0, 1.0), repeat=self.dim)))
        centers, deltas = [], []
        level = 0
        while len(C) and level <= MAX_LEVEL:
            if self.dim == 1:
                L = self.P.edge_lengths[self.spec.edge]
                C = C[(C[:, 0] + h >= 0.0) & (C[:, 0] - h <= L)]
            q, T, reach, dist_T, delta, on_support, leaf = self._lift(C, h)
            keep = self._may_meet(T, dist_T, reach)
            emit = keep & on_support & leaf & (delta > 0)
            centers.append(q[emit])
            deltas.append(delta[emit])
            split = keep & ~emit
            C = (C[split][:, None, :] + 0.5 * h * offsets[None, :, :]).reshape(-1, self.dim)
            h *= 0.5
            level += 1
        if len(C):
            logger.warning(f"{len(C)} cells of {self.spec.label} still unresolved at level {MAX_LEVEL}")
        return np.concatenate(centers), np.concatenate(deltas)


def _project_to_support(cov: Covering, X: np.ndarray) -> np.ndarray:
    P, spec = cov.P, cov.spec
    if cov.shape == "ball":
        return X.copy()
    if cov.shape == "half_ball":
        n = P.normals[spec.face]
        return X - ((X - P.face_origins[spec.face]) @ n)[:, None] * n
    e = spec.edge
    t = np.clip((X - P.edge_starts[e]) @ P.edge_directions[e], 0.0, P.edge_lengths[e])
    return P.edge_starts[e] + t[:, None] * P.edge_directions[e]


def _patch(cov: Covering, rng: np.random.Generator, probes: int) -> Covering:
    """Add elements at first-shell probes (of the tile, when tiled) the tree construction left uncovered."""
    X = cov.base_samples(probes, rng, tile=True)
    for round_ in range(PATCH_ROUNDS):
        missed = X[~cov.covered(X)]
        if len(missed) == 0:
            break
        logger.info(f"Patching {len(missed)} uncovered probes of {cov.spec.label} (round {round_ + 1})")
        q = _project_to_support(cov, missed)
        delta = support_distance(cov.P, cov.spec, cov.P.distances(q))
        ok = delta > 0
        cov.centers = np.vstack([cov.centers, q[ok]])
        cov.deltas = np.concatenate([cov.deltas, delta[ok]])
        cov.generations = np.concatenate([cov.generations, np.zeros(int(ok.sum()), dtype=int)])
        X = missed
    return cov


def _scaled_generations(cov: Covering, generations: range) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Generation-0 elements scaled by 2^-k about the anchor, for each k."""
    base = cov.generations == 0
    rel = cov.centers[base] - cov.anchor
    d0 = cov.deltas[base]
    centers = [cov.anchor + rel * 2.0 ** (-k) for k in generations]
    deltas = [d0 * 2.0 ** (-k) for k in generations]
    gens = [np.full(len(d0), k) for k in generations]
    if not centers:
        return np.zeros((0, 3)), np.zeros(0), np.zeros(0, dtype=int)
    return np.concatenate(centers), np.concatenate(deltas), np.concatenate(gens)


def cover(P: Polytope, spec: NeighborhoodSpec, c: float = COVER_C, chat: float = COVER_CHAT,
          depth: int = COVER_DEPTH, seed: int = ROOT_SEED, probes: int = PROBES) -> Covering:
    """
    Build a covering of the truncated region {r_S ≥ 2^-depth·r0} of a neighborhood.

    Args:
        P: Polytope
        spec: Region to cover (any kind but the interior)
        c: Element scale, R = c·δ(center)
        chat: Enlargement scale of the overlap certificate
        depth: Number of dyadic generations toward the singular feature
        seed: Root seed for the probe samples
        probes: First-shell samples used to patch the tree construction

    Returns:
        Covering

    Raises:
        ConfigurationError: inadmissible (c, ĉ) or ξ
    """
    check_admissible(P, spec, c, chat)
    if depth < 1:
        raise ConfigurationError(f"depth={depth} must be at least 1", key="depth")
    empty = Covering(P, spec, c, chat, 1, np.zeros((0, 3)), np.zeros(0), np.zeros(0, dtype=int))
    centers, deltas = _FirstGenerationBuilder(empty).build()
    first = Covering(P, spec, c, chat, 1, centers, deltas, np.zeros(len(deltas), dtype=int))
    first = _patch(first, make_rng(seed, f"cover-probe:{spec.label}"), probes)
    logger.info(f"Covering of {spec.label}: {len(first)} elements per generation, depth {depth}")
    centers, deltas, gens = _scaled_generations(first, range(depth))
    return Covering(P, spec, c, chat, depth, centers, deltas, gens)


def refine_toward_feature(cov: Covering, extra_depth: int) -> Covering:
    """Append extra_depth generations closer to the singular feature; existing elements are kept as they are."""
    if extra_depth < 0:
        raise ConfigurationError(f"extra_depth={extra_depth} must be non-negative", key="depth")
    depth = cov.depth + extra_depth
    centers, deltas, gens = _scaled_generations(cov, range(cov.depth, depth))
    return Covering(cov.P, cov.spec, cov.c, cov.chat, depth,
                    np.vstack([cov.centers, centers]), np.concatenate([cov.deltas, deltas]),
                    np.concatenate([cov.generations, gens]))


def certify_overlap(cov: Covering, samples: int = MC_BUDGET, seed: int = ROOT_SEED) -> OverlapCertificate:
    """
    Empirical finite-overlap and covering certificate.

    `samples` first-shell samples are drawn once over the whole feature and
    copied into every generation's shell: scaled about the vertex, or, along
    an edge or face, with their offset in the tile scaled and placed in the
    nearest tile of that generation. The same geometry is probed at every
    depth, and every periodic copy a sample meets is counted and checked.

    Returns:
        OverlapCertificate with N_emp, the overlap histogram and the coverage fraction
    """
    rng = make_rng(seed, f"certify:{cov.spec.label}")
    X0 = cov.base_samples(samples, rng)
    X, _ = cov.scaled_samples(X0)
    dist = cov.P.distances(X)
    i, j, d, shift = cov.instance_pairs(X, dist)
    counts = np.bincount(i, minlength=len(X))
    hit = d < cov.c * cov.deltas[j]
    covered = np.bincount(i[hit], minlength=len(X)) > 0

    r_s = singular_distance(cov.P, cov.spec, dist)
    ratio = r_s[i] / (cov.c * cov.deltas[j])
    c_b = []
    for k in range(cov.depth):
        sel = cov.generations[j] == k
        if np.any(sel):
            c_b.append(float(max(ratio[sel].max(), 1.0 / ratio[sel].min())))
        else:
            c_b.append(float("nan"))

    invalid = cov.invalid_elements()
    moved = np.any(shift != 0.0, axis=1)
    if np.any(moved):
        keys = np.unique(np.column_stack([j[moved], shift[moved]]), axis=0)
        idx = keys[:, 0].astype(int)
        invalid += int(np.count_nonzero(cov.invalid_mask(cov.centers[idx] + keys[:, 1:], cov.deltas[idx])))

    values, freq = np.unique(counts, return_counts=True)
    certificate = OverlapCertificate(
        n_emp=int(counts.max()) if len(counts) else 0,
        samples=len(X0),
        evaluated=len(X),
        instances=cov.n_instances,
        histogram={int(v): int(n) for v, n in zip(values, freq)},
        coverage=float(covered.mean()) if len(X) else 1.0,
        uncovered=int(np.count_nonzero(~covered)),
        c_b=c_b,
        invalid_elements=invalid,
        excluded_radius=cov.excluded_radius,
    )
    if certificate.uncovered:
        logger.warning(f"{certificate.uncovered} of {len(X)} samples of {cov.spec.label} are not covered")
    cov.certificate = certificate
    return certificate


# ---------------------------------------------------------------------- export

def export_covering(cov: Covering, path: str) -> None:
    """
    Write one JSON object per element: {shape, center, R, c, chat, generation}.

    Elements of edge and face coverings also carry `periods` and `copies`: the
    element stands for its translates by j·period for j in each copy range.
    """
    with open(path, "wb") as f:
        for el in cov.elements:
            f.write(orjson.dumps(el.to_record(), option=orjson.OPT_SORT_KEYS))
            f.write(b"\n")


def load_covering(path: str) -> List[CoveringElement]:
    elements = []
    with open(path, "rb") as f:
        for line in f:
            if not line.strip():
                continue
            record = orjson.loads(line)
            elements.append(CoveringElement(shape=record["shape"], center=tuple(record["center"]),
                                            radius=record["R"], c=record["c"], chat=record["chat"],
                                            generation=record.get("generation", 0),
                                            periods=tuple(tuple(p) for p in record.get("periods", ())),
                                            copies=tuple(tuple(c) for c in record.get("copies", ()))))
    return elements
