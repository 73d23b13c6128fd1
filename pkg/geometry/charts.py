#!/usr/bin/env python
"""
Local coordinates of the partition regions.

Each chart writes a region as (singular distance r, two transverse parameters):
spherical around a vertex, cylindrical around an edge, a slab over a face, or
a plain box for the interior. Dyadic shells in r are what the weighted-norm
quadrature and the covering certificates iterate over. Charts over-approximate
their region; callers mask with region_test.
"""

from typing import Optional, Tuple

import numpy as np
from shapely.ops import polylabel

from geometry.partition import VERTEX_KINDS, NeighborhoodSpec
from geometry.polytope import Polytope

# Angular margin on top of asin(ξ) for thin regions
ANGLE_MARGIN = 1.15


class NeighborhoodChart:
    """
    Parametrization x(r, p, q) of a region with Jacobian J(r, p, q).

    Attributes:
        geometry: 'sphere', 'cylinder', 'slab' or 'box'
        anchor: origin of the chart (vertex, edge start, face origin or box corner)
        axes: rows a1, a2, a3 of an orthonormal basis
        r_range: range of the singular distance
        p_range, q_range: ranges of the transverse parameters
    """

    def __init__(self, P: Polytope, spec: NeighborhoodSpec, window: Optional[float] = None):
        self.P = P
        self.spec = spec
        self.window = window
        xi = spec.xi
        cap = min(0.5 * np.pi, ANGLE_MARGIN * np.arcsin(min(xi, 1.0)))
        kind = spec.kind
        if kind in VERTEX_KINDS:
            self.geometry = "sphere"
            v = spec.vertex
            self.anchor = P.vertices[v].copy()
            self.r_range = (0.0, spec.outer_radius(P))
            if kind == "v":
                self.axes = np.eye(3)
                self.p_range, self.q_range = (0.0, np.pi), (0.0, 2.0 * np.pi)
            elif kind == "ve":
                d = P.edge_direction_from(spec.edge, v)
                self.axes = _basis_with_third(d)
                self.p_range, self.q_range = (0.0, cap), (0.0, 2.0 * np.pi)
            elif kind == "vef":
                d = P.edge_direction_from(spec.edge, v)
                w = P.in_face_direction(spec.edge, spec.face)
                self.axes = np.array([w, P.inward_normal(spec.face), d])
                self.p_range, self.q_range = (0.0, cap), (0.0, cap)
            else:
                f = spec.face
                self.axes = np.array([P.face_u[f], P.face_w[f], P.inward_normal(f)])
                self.p_range, self.q_range = (0.5 * np.pi - cap, 0.5 * np.pi), (0.0, 2.0 * np.pi)
        elif kind in ("e", "ef"):
            self.geometry = "cylinder"
            e = spec.edge
            f = spec.face if spec.face is not None else P.F_e[e][0]
            self.anchor = P.edge_starts[e].copy()
            w = P.in_face_direction(e, f)
            self.axes = np.array([w, P.inward_normal(f), P.edge_directions[e]])
            self.r_range = (0.0, spec.outer_radius(P))
            self.p_range = (0.0, cap) if kind == "ef" else (0.0, P.interior_angle(e))
            length = P.edge_lengths[e]
            if window is None:
                lo = max(0.0, xi * P.length_scale - self.r_range[1])
                self.q_range = (lo, length - lo)
            else:
                self.q_range = (0.5 * length - window, 0.5 * length + window)
        elif kind == "f":
            self.geometry = "slab"
            f = spec.face
            self.anchor = P.face_origins[f].copy()
            self.axes = np.array([P.face_u[f], P.face_w[f], P.inward_normal(f)])
            self.r_range = (0.0, spec.outer_radius(P))
            if window is None:
                minx, miny, maxx, maxy = P.face_polygons[f].bounds
                self.p_range, self.q_range = (minx, maxx), (miny, maxy)
            else:
                cx, cy = self.face_anchor_coordinates()
                self.p_range, self.q_range = (cx - window, cx + window), (cy - window, cy + window)
        else:
            self.geometry = "box"
            lo, hi = P.bounding_box
            self.anchor = lo.copy()
            self.axes = np.eye(3)
            self.r_range = (lo[2], hi[2])
            self.p_range, self.q_range = (lo[0], hi[0]), (lo[1], hi[1])

    def face_anchor_coordinates(self) -> Tuple[float, float]:
        """In-plane point of the face farthest from its rim."""
        point = polylabel(self.P.face_polygons[self.spec.face], tolerance=1e-6)
        return float(point.x), float(point.y)

    @property
    def focus(self) -> np.ndarray:
        """Point the dyadic shells contract to (vertex, edge midpoint or face anchor)."""
        if self.geometry == "sphere":
            return self.anchor.copy()
        if self.geometry == "cylinder":
            e = self.spec.edge
            return self.P.edge_midpoint(e)
        if self.geometry == "slab":
            cx, cy = self.face_anchor_coordinates()
            return self.P.face_point(self.spec.face, np.array([cx, cy]))[0]
        return 0.5 * (self.P.bounding_box[0] + self.P.bounding_box[1])

    def points(self, r: np.ndarray, p: np.ndarray, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Map chart coordinates to points.

        Args:
            r, p, q: Broadcastable arrays of chart coordinates

        Returns:
            (X of shape (N, 3), Jacobian of shape (N,))
        """
        r, p, q = np.broadcast_arrays(*(np.asarray(a, dtype=float).ravel() for a in (r, p, q)))
        a1, a2, a3 = self.axes
        if self.geometry == "sphere":
            dirs = (np.sin(p) * np.cos(q))[:, None] * a1 + (np.sin(p) * np.sin(q))[:, None] * a2 + np.cos(p)[:, None] * a3
            return self.anchor + r[:, None] * dirs, r ** 2 * np.sin(p)
        if self.geometry == "cylinder":
            radial = np.cos(p)[:, None] * a1 + np.sin(p)[:, None] * a2
            return self.anchor + q[:, None] * a3 + r[:, None] * radial, r.copy()
        if self.geometry == "slab":
            X = self.anchor + p[:, None] * a1 + q[:, None] * a2 + r[:, None] * a3
            return X, np.ones_like(r)
        X = np.column_stack([p, q, r])
        return X, np.ones_like(r)

    def singular_distance(self, X: np.ndarray) -> np.ndarray:
        """Distance of points to the singular feature of the region."""
        kind, idx = self.spec.singular_feature
        d = self.P.distances(X)
        if kind == "vertex":
            return d.r_v[:, idx]
        if kind == "edge":
            return d.r_e[:, idx]
        if kind == "face":
            return d.r_f[:, idx]
        return d.r_bnd

    def sample(self, n: int, rng: np.random.Generator, r_lo: float, r_hi: float) -> np.ndarray:
        """
        Points of the chart with r in [r_lo, r_hi], uniform in volume.

        Not masked: callers keep the ones inside the region.
        """
        u = rng.random((n, 3))
        if self.geometry == "sphere":
            r = np.cbrt(r_lo ** 3 + u[:, 0] * (r_hi ** 3 - r_lo ** 3))
            c_lo, c_hi = np.cos(self.p_range[1]), np.cos(self.p_range[0])
            p = np.arccos(c_lo + u[:, 1] * (c_hi - c_lo))
        elif self.geometry == "cylinder":
            r = np.sqrt(r_lo ** 2 + u[:, 0] * (r_hi ** 2 - r_lo ** 2))
            p = self.p_range[0] + u[:, 1] * (self.p_range[1] - self.p_range[0])
        else:
            r = r_lo + u[:, 0] * (r_hi - r_lo)
            p = self.p_range[0] + u[:, 1] * (self.p_range[1] - self.p_range[0])
        q = self.q_range[0] + u[:, 2] * (self.q_range[1] - self.q_range[0])
        X, _ = self.points(r, p, q)
        return X


def _basis_with_third(a3: np.ndarray) -> np.ndarray:
    """Orthonormal rows (a1, a2, a3) completing a unit vector."""
    helper = np.eye(3)[np.argmin(np.abs(a3))]
    a1 = np.cross(a3, helper)
    a1 /= np.linalg.norm(a1)
    a2 = np.cross(a3, a1)
    return np.array([a1, a2, a3])
