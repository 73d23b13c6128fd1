#!/usr/bin/env python
"""
Norms of manufactured triples on local sets B_R and extended sets B_R × (0, θ).

Local sets are balls, half-balls and wedges. Derivatives are admissible
along the directions the set is invariant under: every direction in a
ball, directions tangential to the face of a half-ball, and the edge
direction of a wedge.
"""

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from config import FD_EPS, MC_BUDGET, ROOT_SEED
from errors import ConfigurationError
from geometry.partition import CANONICAL_FRAME, Frame
from numerics.fields import Field as ScalarField
from numerics.quadrature import MultiIndex, directional_derivative, integrate_shells, slobodeckij, weighted_norm
from numerics.regions import BallRegion, CylinderRegion
from verification.manufactured import ManufacturedTriple

logger = logging.getLogger(__name__)

ALIGN_TOL = 1e-10


# ---------------------------------------------------------------------- admissible directions

def ball_frame(ball: BallRegion) -> Frame:
    """g_⊥ along the face normal of a half-ball, g_∥ along the edge of a wedge."""
    a1, a2, a3 = ball.axes
    if ball.shape == "half_ball":
        return Frame.from_vectors(a3, a1)
    if ball.shape == "wedge":
        return Frame.from_vectors(a2, a3)
    return CANONICAL_FRAME


def admissible_axes(ball: BallRegion) -> Tuple[int, ...]:
    """Frame axes (⊥, ⊨, ∥) along which derivatives may be taken."""
    return {"ball": (0, 1, 2), "half_ball": (1, 2), "wedge": (2,)}[ball.shape]


def check_direction(ball: BallRegion, direction: Sequence[float]) -> np.ndarray:
    """
    Unit direction of D_•.

    Raises:
        ConfigurationError: wrong length, zero, or not admissible for the shape
    """
    g = np.asarray(direction, dtype=float).reshape(-1)
    if len(g) != ball.dim or np.linalg.norm(g) == 0.0:
        raise ConfigurationError(f"direction {g.tolist()} does not fit a ball in dimension {ball.dim}", key="direction")
    g = g / np.linalg.norm(g)
    if ball.shape == "half_ball" and abs(g @ ball.axes[2]) > ALIGN_TOL:
        raise ConfigurationError(f"direction {g.tolist()} is not tangential to the half-ball's face", key="direction")
    if ball.shape == "wedge" and abs(abs(g @ ball.axes[2]) - 1.0) > ALIGN_TOL:
        raise ConfigurationError(f"direction {g.tolist()} is not along the wedge's edge", key="direction")
    return g


def check_multi_index(ball: BallRegion, beta) -> MultiIndex:
    """
    Raises:
        ConfigurationError: β differentiates along a non-admissible frame axis
    """
    beta = MultiIndex.coerce(beta)
    if ball.dim != 3:
        raise ConfigurationError("multi-index derivatives need a ball in three dimensions", key="beta")
    allowed = admissible_axes(ball)
    if any(b > 0 and axis not in allowed for axis, b in enumerate(beta.as_tuple())):
        raise ConfigurationError(f"β={beta.label} is not admissible on a {ball.shape}", key="beta")
    return beta


def index_directions(ball: BallRegion, order: int) -> List[Tuple[str, List[np.ndarray]]]:
    """(label, directions) of every admissible derivative of the given order."""
    if ball.dim == 1:
        return [(f"({order})", [np.ones(1)] * order)]
    frame = ball_frame(ball)
    return [(beta.label, frame.directions(beta.as_tuple()))
            for beta in MultiIndex.of_order(order, admissible_axes(ball))]


def lift(directions: Sequence[np.ndarray]) -> List[np.ndarray]:
    """x-directions as directions in (x, y)."""
    return [np.append(np.asarray(g, dtype=float), 0.0) for g in directions]


def cylinder(ball: BallRegion, height: float, alpha: float) -> CylinderRegion:
    return CylinderRegion(ball, height, alpha)


# ---------------------------------------------------------------------- squared norms

class GradientNorm(BaseModel):
    """∫ y^α w² |D∇U|² over a cylinder, with a finite-difference noise estimate."""
    squared: float
    noise: float = 0.0
    divergent: bool = False


def _gradient_derivatives(U: ScalarField, directions: List[np.ndarray], X: np.ndarray,
                          h: Optional[float] = None) -> np.ndarray:
    eye = np.eye(U.dim)
    if not directions:
        return U.gradient(X)
    if U.has_analytic:
        return np.column_stack([U.derivative(X, directions + [e]) for e in eye])
    columns = []
    for i in range(U.dim):
        component = _GradientComponent(U, i)
        columns.append(directional_derivative(component, directions, X, h=h))
    return np.column_stack(columns)


class _GradientComponent(ScalarField):
    def __init__(self, U: ScalarField, i: int):
        super().__init__(U.dim, name=f"d{i}[{U.name}]", domain=U.domain)
        self.U = U
        self.i = i

    def _evaluate(self, X: np.ndarray) -> np.ndarray:
        return self.U.gradient(X)[:, self.i]


def grad_norm_sq(U: ScalarField, region: CylinderRegion, directions: Sequence[np.ndarray] = (),
                 weight: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> GradientNorm:
    """
    ‖w·D_{g_1}...D_{g_k}∇U‖²_{L²_α(region)} for x-directions g.

    Without analytic derivatives the integral is repeated with twice the
    finite-difference step; the change is the noise estimate.
    """
    dirs = lift(directions)

    def integrand(X: np.ndarray, h: Optional[float] = None) -> np.ndarray:
        values = np.sum(_gradient_derivatives(U, dirs, X, h) ** 2, axis=1)
        if weight is not None:
            values = values * weight(X) ** 2
        return values

    total = integrate_shells(region, integrand)
    if total.divergent:
        return GradientNorm(squared=math.inf, noise=math.inf, divergent=True)
    noise = 0.0
    if dirs and not U.has_analytic:
        h = 2.0 * FD_EPS ** (1.0 / (len(dirs) + 2))
        noise = abs(integrate_shells(region, lambda X: integrand(X, h)).value - total.value)
    return GradientNorm(squared=total.value, noise=noise)


def flux_norm_sq(F: ScalarField, region: CylinderRegion, directions: Sequence[np.ndarray] = ()) -> float:
    """‖D^η F‖²_{L²_{−α}}, integrated as ∫ y^α (y^{−α} D^η F)² on the y^α cylinder."""
    dirs = lift(directions)
    a = region.alpha

    def integrand(X: np.ndarray) -> np.ndarray:
        values = directional_derivative(F, dirs, X) * X[:, -1] ** (-a)
        return values * values

    return integrate_shells(region, integrand).value


def sobolev_norm(f: ScalarField, ball: BallRegion, order: float, budget: int = MC_BUDGET,
                 seed: int = ROOT_SEED, job: str = "sobolev") -> Tuple[float, float]:
    """‖f‖_{H^σ(B)} = (‖f‖²_{L²} + |f|²_{H^σ})^{1/2} with the Monte-Carlo standard error."""
    l2 = weighted_norm(f, ball).squared
    semi = slobodeckij(f, ball, order, budget=budget, seed=seed, job=job)
    value = math.sqrt(l2 + max(semi.value, 0.0))
    stderr = semi.stderr / (2.0 * value) if value > 0.0 else 0.0
    return value, stderr


# ---------------------------------------------------------------------- data norm Ñ^{(p)}

class DataNormComponent(BaseModel):
    """Contribution of derivative order j to Ñ^{(p)}."""
    j: int
    f_max: float
    f_index: str
    F_max: float
    F_index: str
    term: float


class DataNormBundle(BaseModel):
    """
    Ñ^{(p)} = Σ_{j=1}^{p+1} (γp)^{−2j}·(3^j max_{|η|=j}‖∂^η f‖²_{L²(B_R)}
                                      + 3^{j−1} max_{|η|=j−1}‖∂^η F‖²_{L²_{−α}(B_R^Y)}).

    γp is replaced by γ·max(p, 1) so that p = 0 is defined.
    """
    radius: float
    height: float
    p: int
    gamma: float
    value: float
    components: List[DataNormComponent]

    @property
    def gamma_p(self) -> float:
        return self.gamma * max(self.p, 1)

    @property
    def scaled(self) -> float:
        """(γp)^{2p}·Ñ^{(p)}, non-decreasing in p for γ ≥ 1."""
        return self.gamma_p ** (2 * self.p) * self.value


def _max_over(indices, norm: Callable[[List[np.ndarray]], float]) -> Tuple[float, str]:
    best, label = 0.0, ""
    for name, dirs in indices:
        value = norm(dirs)
        if value > best or not label:
            best, label = value, name
    return best, label


def data_norm(triple: ManufacturedTriple, ball: BallRegion, p: int, gamma: float,
              height: Optional[float] = None) -> DataNormBundle:
    """
    Ñ^{(p)} of (F, f) on B_R and B_R × (0, height) with its component table.

    Raises:
        ConfigurationError: p < 0 or γ ≤ 0
    """
    if p < 0:
        raise ConfigurationError(f"order p={p} must be non-negative", key="p")
    if gamma <= 0.0:
        raise ConfigurationError(f"gamma={gamma} must be positive", key="gamma")
    height = triple.Y if height is None else height
    cyl = cylinder(ball, height, triple.alpha)
    gp = gamma * max(p, 1)
    components, total = [], 0.0
    for j in range(1, p + 2):
        f_max, f_index = _max_over(index_directions(ball, j),
                                   lambda dirs: weighted_norm(triple.f, ball, directions=dirs).squared)
        F_max, F_index = _max_over(index_directions(ball, j - 1),
                                   lambda dirs: flux_norm_sq(triple.F, cyl, dirs))
        term = gp ** (-2 * j) * (3 ** j * f_max + 3 ** (j - 1) * F_max)
        total += term
        components.append(DataNormComponent(j=j, f_max=f_max, f_index=f_index, F_max=F_max, F_index=F_index,
                                            term=term))
    logger.debug(f"data norm of {triple.name} on R={ball.radius:g}, p={p}: {total:.6e}")
    return DataNormBundle(radius=ball.radius, height=height, p=p, gamma=gamma, value=total, components=components)


def data_norm_resummed(bundle: DataNormBundle) -> float:
    """Ñ^{(p)} re-summed from the component table, highest order first."""
    gp = bundle.gamma * max(bundle.p, 1)
    terms = [(3.0 ** c.j * c.f_max + 3.0 ** (c.j - 1) * c.F_max) / gp ** (2 * c.j)
             for c in sorted(bundle.components, key=lambda c: -c.j)]
    return math.fsum(terms)


# ---------------------------------------------------------------------- N(U, F, f)

class NSquared(BaseModel):
    """N² = ‖∇U‖(‖∇U‖ + ‖F‖_{L²_{−α}} + ‖f‖_{H^{1−s}}) on one local set."""
    value: float
    grad_norm: float
    F_norm: float
    f_norm: float
    stderr: float


def n_squared(triple: ManufacturedTriple, ball: BallRegion, budget: int = MC_BUDGET, seed: int = ROOT_SEED,
              job: str = "n-squared") -> NSquared:
    cyl = cylinder(ball, triple.Y, triple.alpha)
    grad = math.sqrt(grad_norm_sq(triple.U, cyl).squared)
    F_norm = math.sqrt(flux_norm_sq(triple.F, cyl))
    f_norm, f_err = sobolev_norm(triple.f, ball, 1.0 - triple.s, budget=budget, seed=seed, job=job)
    value = grad * (grad + F_norm + f_norm)
    return NSquared(value=value, grad_norm=grad, F_norm=F_norm, f_norm=f_norm, stderr=grad * f_err)
