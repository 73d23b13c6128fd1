#!/usr/bin/env python
"""
Integration regions.

Every region hands out quadrature points and weights shell by shell:
shell(k) for k = 0, 1, ... Regular regions have a single shell
(n_shells = 1); singular regions have dyadic shells toward their singular
point, edge or face (n_shells = None) and are summed by integrate_shells.
Regions used by the Monte-Carlo estimators also sample uniformly and report
their volume and diameter.
"""

import logging
import math
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from config import SHELL_ORDER
from errors import ConfigurationError
from geometry.charts import NeighborhoodChart
from geometry.covering import CoveringElement
from geometry.partition import NeighborhoodSpec, all_specs, frame_for, region_test
from geometry.polytope import Polytope
from numerics.fields import Field as ScalarField
from numerics.quadrature import (MultiIndex, NormResult, WeightSpec, composite_gauss, gauss_legendre,
                                 graded_breaks, integrate_shells, jacobi_rule, weighted_norm)

logger = logging.getLogger(__name__)

PANELS = 8
INNER_ORDER = 4


def _tensor(*rules: Tuple[np.ndarray, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor product of 1D rules: (points of shape (N, len(rules)), weights)."""
    nodes = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    weights = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    X = np.column_stack([n.ravel() for n in nodes])
    W = np.prod(np.column_stack([w.ravel() for w in weights]), axis=1)
    return X, W


def _panels(a: float, b: float, n: int = PANELS) -> np.ndarray:
    return np.linspace(a, b, n + 1)


class Region:
    """Common interface; see the module docstring."""
    dim: int = 3
    polytope: Optional[Polytope] = None
    n_shells: Optional[int] = 1

    def shell(self, k: int) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def contains(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} does not sample")

    @property
    def volume(self) -> float:
        raise NotImplementedError

    @property
    def diameter(self) -> float:
        raise NotImplementedError


class BoxRegion(Region):
    """Axis-aligned box in any dimension."""

    def __init__(self, lo: Sequence[float], hi: Sequence[float], order: int = INNER_ORDER, panels: int = 2):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if np.any(self.hi <= self.lo):
            raise ConfigurationError("box corners must satisfy lo < hi", key="box")
        self.dim = len(self.lo)
        self.order = order
        self.panels = panels

    def shell(self, k: int) -> Tuple[np.ndarray, np.ndarray]:
        return _tensor(*[composite_gauss(_panels(a, b, self.panels), self.order) for a, b in zip(self.lo, self.hi)])

    def contains(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.all((X > self.lo) & (X < self.hi), axis=1)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(n, self.dim))

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))


class BallRegion(Region):
    """
    Ball, half-ball or wedge of radius R around a center.

    Spherical coordinates use the rows (a1, a2, a3) of `axes` with polar
    axis a3. A half-ball keeps a3·(x − c) > 0; a wedge keeps azimuths in
    (0, opening) measured from a1 toward a2, i.e. the ball cut by two
    half-spaces whose common line through c is along a3.

    With singular=True the radial direction is split into dyadic shells
    toward the center.
    """

    def __init__(self, center: Sequence[float], radius: float, shape: str = "ball",
                 axes: Optional[np.ndarray] = None, opening: Optional[float] = None,
                 singular: bool = False, order: int = SHELL_ORDER):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        if self.radius <= 0.0:
            raise ConfigurationError(f"radius {radius} must be positive", key="radius")
        self.dim = len(self.center)
        if self.dim not in (1, 3):
            raise ConfigurationError(f"balls are supported in dimensions 1 and 3, got {self.dim}", key="dim")
        if shape not in ("ball", "half_ball", "wedge") or (self.dim == 1 and shape != "ball"):
            raise ConfigurationError(f"unsupported ball shape {shape!r} in dimension {self.dim}", key="shape")
        if shape == "wedge" and not (opening and 0.0 < opening < 2.0 * math.pi):
            raise ConfigurationError(f"wedge opening {opening} must lie in (0, 2π)", key="opening")
        self.shape = shape
        self.axes = np.eye(3) if axes is None else np.asarray(axes, dtype=float)
        self.opening = opening
        self.singular = singular
        self.order = order
        self.n_shells = None if singular else 1
        self.cos_range = (0.0, 1.0) if shape == "half_ball" else (-1.0, 1.0)
        self.q_range = (0.0, opening) if shape == "wedge" else (0.0, 2.0 * math.pi)

    def scaled(self, factor: float) -> "BallRegion":
        """Concentric region with radius factor·R."""
        return BallRegion(self.center, factor * self.radius, self.shape, self.axes, self.opening,
                          self.singular, self.order)

    def _angular(self) -> Tuple[np.ndarray, np.ndarray]:
        n = self.order
        cp, wc = gauss_legendre(self.cos_range[0], self.cos_range[1], n)
        if self.shape == "wedge":
            q, wq = gauss_legendre(self.q_range[0], self.q_range[1], n)
        else:
            q = (np.arange(2 * n) + 0.5) * math.pi / n
            wq = np.full(2 * n, math.pi / n)
        A, W = _tensor((cp, wc), (q, wq))
        sp = np.sqrt(1.0 - A[:, 0] ** 2)
        a1, a2, a3 = self.axes
        dirs = (sp * np.cos(A[:, 1]))[:, None] * a1 + (sp * np.sin(A[:, 1]))[:, None] * a2 + A[:, :1] * a3
        return dirs, W

    def _radial(self, k: int) -> Tuple[np.ndarray, np.ndarray]:
        if self.singular:
            return gauss_legendre(self.radius * 2.0 ** (-k - 1), self.radius * 2.0 ** (-k), self.order)
        return gauss_legendre(0.0, self.radius, self.order)

    def shell(self, k: int) -> Tuple[np.ndarray, np.ndarray]:
        r, wr = self._radial(k)
        if self.dim == 1:
            X = np.concatenate([self.center[0] - r, self.center[0] + r])[:, None]
            return X, np.concatenate([wr, wr])
        dirs, wa = self._angular()
        X = self.center + (r[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
        W = (wr[:, None] * r[:, None] ** 2 * wa[None, :]).ravel()
        return X, W

    def contains(self, X: np.ndarray) -> np.ndarray:
        rel = np.atleast_2d(X) - self.center
        mask = np.linalg.norm(rel, axis=1) < self.radius
        if self.shape == "half_ball":
            mask &= rel @ self.axes[2] > 0.0
        elif self.shape == "wedge":
            q = np.mod(np.arctan2(rel @ self.axes[1], rel @ self.axes[0]), 2.0 * math.pi)
            mask &= q < self.opening
        return mask

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.dim == 1:
            return self.center + rng.uniform(-self.radius, self.radius, size=(n, 1))
        r = self.radius * np.cbrt(rng.random(n))
        cp = rng.uniform(*self.cos_range, size=n)
        q = rng.uniform(*self.q_range, size=n)
        sp = np.sqrt(1.0 - cp ** 2)
        a1, a2, a3 = self.axes
        dirs = (sp * np.cos(q))[:, None] * a1 + (sp * np.sin(q))[:, None] * a2 + cp[:, None] * a3
        return self.center + r[:, None] * dirs

    @property
    def volume(self) -> float:
        if self.dim == 1:
            return 2.0 * self.radius
        return self.radius ** 3 / 3.0 * (self.cos_range[1] - self.cos_range[0]) * (self.q_range[1] - self.q_range[0])

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius


class PolytopeRegion(Region):
    """The whole polytope: Gauss rule on its bounding box masked by membership."""

    def __init__(self, P: Polytope, order: int = INNER_ORDER, panels: int = 4):
        self.polytope = P
        self.box = BoxRegion(*P.bounding_box, order=order, panels=panels)

    def shell(self, k: int) -> Tuple[np.ndarray, np.ndarray]:
        X, W = self.box.shell(0)
        keep = self.polytope.contains(X)
        return X[keep], W[keep]

    def contains(self, X: np.ndarray) -> np.ndarray:
        return self.polytope.contains(X)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.polytope.sample_interior(n, rng)

    @property
    def volume(self) -> float:
        return float(np.sum(self.shell(0)[1]))

    @property
    def diameter(self) -> float:
        return self.polytope.diameter


class NeighborhoodRegion(Region):
    """
    One region of the partition, integrated in its chart.

    Shell k covers r ∈ (R·2^{-k-1}, R·2^{-k}) of the singular distance, with
    R the region's outer radius. Inside a shell the transverse coordinates
    are graded toward the lower-dimensional features the region touches:
    the edge for ve, edge and face for vef, the face for vf and ef.
    """

    def __init__(self, P: Polytope, spec: NeighborhoodSpec, window: Optional[float] = None,
                 order: int = SHELL_ORDER, inner_order: int = INNER_ORDER, panels: int = PANELS):
        spec.check_features(P)
        P.check_xi(spec.xi)
        self.polytope = P
        self.spec = spec
        self.chart = NeighborhoodChart(P, spec, window)
        self.order = order
        self.inner_order = inner_order
        self.n_shells = 1 if spec.kind == "int" else None
        self._transverse = self._transverse_rule(panels)

    def _transverse_rule(self, panels: int) -> Tuple[np.ndarray, np.ndarray]:
        kind, n = self.spec.kind, self.inner_order
        (p0, p1), (q0, q1) = self.chart.p_range, self.chart.q_range
        p_toward = {"ve": "a", "vef": "a", "ef": "a", "vf": "b"}.get(kind, "none")
        q_toward = "a" if kind == "vef" else "none"
        p_breaks = graded_breaks(p0, p1, p_toward) if p_toward != "none" else _panels(p0, p1, panels)
        q_breaks = graded_breaks(q0, q1, q_toward) if q_toward != "none" else _panels(q0, q1, panels)
        return _tensor(composite_gauss(p_breaks, n), composite_gauss(q_breaks, n))

    def _radial(self, k: int) -> Tuple[np.ndarray, np.ndarray]:
        lo, hi = self.chart.r_range
        if self.n_shells == 1:
            return composite_gauss(_panels(lo, hi, PANELS), self.inner_order)
        return gauss_legendre(hi * 2.0 ** (-k - 1), hi * 2.0 ** (-k), self.order)

    def shell(self, k: int) -> Tuple[np.ndarray, np.ndarray]:
        r, wr = self._radial(k)
        PQ, wpq = self._transverse
        R = np.repeat(r, len(PQ))
        X, J = self.chart.points(R, np.tile(PQ[:, 0], len(r)), np.tile(PQ[:, 1], len(r)))
        W = np.repeat(wr, len(PQ)) * np.tile(wpq, len(r)) * J
        keep = self.contains(X)
        return X[keep], W[keep]

    def contains(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        dist = self.polytope.distances(X)
        mask = region_test(self.polytope, self.spec, dist)
        if np.any(mask):
            mask[mask] &= self.polytope.contains(X[mask], distances=dist.r_bnd[mask])
        return mask

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        lo, hi = self.chart.r_range
        accepted, count = [], 0
        while count < n:
            batch = self.chart.sample(max(4 * (n - count), 256), rng, lo, hi)
            batch = batch[self.contains(batch)]
            accepted.append(batch)
            count += len(batch)
        return np.concatenate(accepted)[:n]

    @property
    def volume(self) -> float:
        return integrate_shells(self, lambda X: np.ones(len(X))).value

    @property
    def diameter(self) -> float:
        if self.chart.geometry == "sphere":
            return 2.0 * self.chart.r_range[1]
        return self.polytope.diameter


class WedgeModelRegion(Region):
    """
    Model vertex-edge-face neighborhood {0<x1<μ, 0<x2<ξ·x1, 0<x3<ξ·x2}.

    Written as x1 = μa, x2 = ξ·x1·b, x3 = ξ·x2·c over the unit cube with
    Jacobian ξ³μ³a²b. Shells are dyadic in a (toward the vertex) and b, c are
    graded toward the edge x2 = x3 = 0 and the face x3 = 0.
    """

    def __init__(self, mu: float, xi: float, order: int = SHELL_ORDER, inner_order: int = INNER_ORDER):
        if mu <= 0.0 or not 0.0 < xi < 1.0:
            raise ConfigurationError(f"model wedge needs μ > 0 and ξ in (0, 1), got μ={mu}, ξ={xi}", key="xi")
        self.mu = float(mu)
        self.xi = float(xi)
        self.order = order
        self.n_shells = None
        self._bc = _tensor(composite_gauss(graded_breaks(0.0, 1.0, "a"), inner_order),
                           composite_gauss(graded_breaks(0.0, 1.0, "a"), inner_order))

    def points(self, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        x1 = self.mu * a
        x2 = self.xi * x1 * b
        x3 = self.xi * x2 * c
        return np.column_stack([x1, x2, x3]), self.xi ** 3 * self.mu ** 3 * a ** 2 * b

    def shell(self, k: int) -> Tuple[np.ndarray, np.ndarray]:
        a, wa = gauss_legendre(2.0 ** (-k - 1), 2.0 ** (-k), self.order)
        BC, wbc = self._bc
        X, J = self.points(np.repeat(a, len(BC)), np.tile(BC[:, 0], len(a)), np.tile(BC[:, 1], len(a)))
        return X, np.repeat(wa, len(BC)) * np.tile(wbc, len(a)) * J

    def contains(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        x1, x2, x3 = X.T
        return (x1 > 0) & (x1 < self.mu) & (x2 > 0) & (x2 < self.xi * x1) & (x3 > 0) & (x3 < self.xi * x2)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        a = np.cbrt(rng.random(n))
        b = np.sqrt(rng.random(n))
        c = rng.random(n)
        return self.points(a, b, c)[0]

    @property
    def volume(self) -> float:
        return self.xi ** 3 * self.mu ** 3 / 6.0

    @property
    def diameter(self) -> float:
        return self.mu * math.sqrt(1.0 + self.xi ** 2 + self.xi ** 4)


def equivalent_vef_wedge(mu: float, xi: float) -> WedgeModelRegion:
    """Model neighborhood of a vertex-edge-face corner with its quadrature."""
    return WedgeModelRegion(mu, xi)


class CylinderRegion(Region):
    """
    base × (0, Y) with the measure y^α dx dy.

    Without singular_y the y-direction uses the Gauss–Jacobi rule for y^α
    and the shells are those of the base. With singular_y the base must be
    regular and shell k is base × (Y·2^{-k-1}, Y·2^{-k}), for integrands that
    blow up as y → 0 beyond the weight.
    """

    def __init__(self, base: Region, Y: float, alpha: float = 0.0, singular_y: bool = False,
                 order: int = SHELL_ORDER):
        if Y <= 0.0:
            raise ConfigurationError(f"cylinder height Y={Y} must be positive", key="Y")
        if alpha <= -1.0:
            raise ConfigurationError(f"weight y^{alpha} is not integrable at 0", key="alpha")
        if singular_y and base.n_shells != 1:
            raise ConfigurationError("y-shells need a regular base region", key="singular_y")
        self.base = base
        self.Y = float(Y)
        self.alpha = float(alpha)
        self.singular_y = singular_y
        self.order = order
        self.dim = base.dim + 1
        self.polytope = base.polytope
        self.n_shells = None if singular_y else base.n_shells
        self._rule = None if singular_y else jacobi_rule(self.alpha, self.Y, order)

    def with_weight(self, alpha: float) -> "CylinderRegion":
        return CylinderRegion(self.base, self.Y, alpha, self.singular_y, self.order)

    def with_height(self, Y: float) -> "CylinderRegion":
        return CylinderRegion(self.base, Y, self.alpha, self.singular_y, self.order)

    def shell(self, k: int) -> Tuple[np.ndarray, np.ndarray]:
        if self.singular_y:
            Xb, Wb = self.base.shell(0)
            y, wy = gauss_legendre(self.Y * 2.0 ** (-k - 1), self.Y * 2.0 ** (-k), self.order)
            wy = wy * y ** self.alpha
        else:
            Xb, Wb = self.base.shell(k)
            y, wy = self._rule.nodes, self._rule.weights
        X = np.column_stack([np.repeat(Xb, len(y), axis=0), np.tile(y, len(Xb))])
        return X, np.repeat(Wb, len(y)) * np.tile(wy, len(Xb))

    def contains(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        return self.base.contains(X[:, :-1]) & (X[:, -1] > 0.0) & (X[:, -1] < self.Y)

    @property
    def volume(self) -> float:
        return self.base.volume * self.Y ** (self.alpha + 1.0) / (self.alpha + 1.0)

    @property
    def diameter(self) -> float:
        return math.hypot(self.base.diameter, self.Y)


def element_region(P: Polytope, element: CoveringElement, spec: NeighborhoodSpec,
                   scale: float = 1.0) -> BallRegion:
    """
    The set B_{scale·R} of a covering element: ball, half-ball on the region's
    face, or wedge along the region's edge.
    """
    if element.shape == "ball":
        return BallRegion(element.center, scale * element.radius)
    if element.shape == "half_ball":
        f = spec.face
        axes = np.array([P.face_u[f], P.face_w[f], P.inward_normal(f)])
        return BallRegion(element.center, scale * element.radius, "half_ball", axes=axes)
    e = spec.edge
    f = P.F_e[e][0]
    axes = np.array([P.in_face_direction(e, f), P.inward_normal(f), P.edge_directions[e]])
    return BallRegion(element.center, scale * element.radius, "wedge", axes=axes, opening=P.interior_angle(e))


def element_cylinder(P: Polytope, element: CoveringElement, spec: NeighborhoodSpec, theta: float,
                     alpha: float, scale: float = 1.0, singular_y: bool = False) -> CylinderRegion:
    """Extended set B^θ_{scale·R} = element × (0, θ) with the weight y^α."""
    return CylinderRegion(element_region(P, element, spec, scale), theta, alpha, singular_y=singular_y)


# ---------------------------------------------------------------------- all regions at once

class GlobalNorm(BaseModel):
    """Σ over the partition of the squared weighted norms, with the per-region breakdown."""
    value: float
    divergent: bool
    regions: Dict[str, float]


def global_weighted_norm(u: ScalarField, P: Polytope, xi: float, t: float, s: float, beta) -> GlobalNorm:
    """
    Weighted norm of D^β u over every region of the partition, each in its own
    frame and with its own feature weights.
    """
    beta = MultiIndex.coerce(beta)
    P.check_xi(xi)
    total, divergent, per_region = 0.0, False, {}
    for spec in all_specs(P, xi):
        result: NormResult = weighted_norm(u, NeighborhoodRegion(P, spec), WeightSpec.regularity(spec, beta, t, s),
                                           beta, frame_for(P, spec))
        per_region[spec.label] = result.value
        divergent |= result.divergent
        total += result.squared
        logger.debug(f"{spec.label}: {result.value:.6g} over {result.shells} shells")
    value = math.inf if divergent else math.sqrt(total)
    return GlobalNorm(value=value, divergent=divergent, regions=per_region)
