#!/usr/bin/env python
"""
Quadrature rules, directional derivatives and weighted norms.

Singular integrands are summed over dyadic shells toward their singular set.
Each region hands out the points and weights of its k-th shell; the shell
sums are accumulated until the geometric tail falls below SHELL_TAIL_TOL of
the total, or are flagged divergent once they stop decreasing.
"""

import logging
import math
from functools import lru_cache
from itertools import count, product
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import gamma, roots_jacobi

from config import FD_EPS, MAX_SHELLS, MC_BUDGET, ROOT_SEED, SHELL_TAIL_TOL
from errors import ConfigurationError, DomainError
from geometry.partition import CANONICAL_FRAME, Frame, NeighborhoodSpec
from geometry.polytope import Polytope
from numerics.fields import Field as ScalarField
from utils import make_rng

logger = logging.getLogger(__name__)

# Highest derivative order taken by finite differences
FD_MAX_ORDER = 3
# Shells compared when testing a sum for divergence
DIVERGENCE_SPAN = 4
DIVERGENCE_MIN_SHELLS = 8


# ---------------------------------------------------------------------- 1D rules

class JacobiRule(BaseModel):
    """Gauss rule for ∫_0^Y y^α g(y) dy."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    alpha: float = Field(gt=-1.0)
    Y: float = Field(gt=0.0)
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


@lru_cache(maxsize=256)
def _jacobi_reference(alpha: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = roots_jacobi(n, 0.0, alpha)
    return x, w


def jacobi_rule(alpha: float, Y: float, n: int) -> JacobiRule:
    """
    n-point Gauss–Jacobi rule on (0, Y) for the weight y^α.

    Exact for polynomials of degree ≤ 2n−1.

    Raises:
        ConfigurationError: α ≤ −1 (weight not integrable), Y ≤ 0 or n < 1
    """
    if alpha <= -1.0:
        raise ConfigurationError(f"weight y^{alpha} is not integrable at 0", key="alpha")
    if Y <= 0.0:
        raise ConfigurationError(f"cylinder height Y={Y} must be positive", key="Y")
    if n < 1:
        raise ConfigurationError(f"rule size n={n} must be at least 1", key="n")
    x, w = _jacobi_reference(float(alpha), int(n))
    nodes = 0.5 * Y * (1.0 + x)
    weights = w * (0.5 * Y) ** (alpha + 1.0)
    return JacobiRule(alpha=alpha, Y=Y, nodes=nodes, weights=weights)


@lru_cache(maxsize=64)
def _legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre(a: float, b: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """n-point Gauss–Legendre nodes and weights on (a, b)."""
    x, w = _legendre(int(n))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def composite_gauss(breaks: Sequence[float], n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss–Legendre on each panel between consecutive breaks."""
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b > a:
            x, w = gauss_legendre(a, b, n)
            nodes.append(x)
            weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def graded_breaks(a: float, b: float, toward: str = "a", levels: int = 8, sigma: float = 0.2) -> np.ndarray:
    """
    Panel breaks of (a, b) refined geometrically toward one or both ends.

    Args:
        toward: 'a', 'b', 'both' or 'none'
        levels: Number of geometric panels per refined end
        sigma: Ratio between consecutive panel sizes
    """
    if toward == "none":
        return np.array([a, b])
    if toward == "both":
        mid = 0.5 * (a + b)
        return np.concatenate([graded_breaks(a, mid, "a", levels, sigma)[:-1],
                               graded_breaks(mid, b, "b", levels, sigma)])
    ladder = sigma ** np.arange(levels, -1, -1)
    if toward == "a":
        return np.concatenate([[a], a + (b - a) * ladder])
    return np.concatenate([b - (b - a) * ladder[::-1], [b]])


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^{d−1}."""
    return 2.0 * math.pi ** (0.5 * d) / gamma(0.5 * d)


# ---------------------------------------------------------------------- multi-indices and weights

class MultiIndex(BaseModel):
    """Derivative orders (β_⊥, β_⊨, β_∥) along the frame directions."""
    model_config = ConfigDict(frozen=True)

    b_perp: int = Field(default=0, ge=0)
    b_parperp: int = Field(default=0, ge=0)
    b_par: int = Field(default=0, ge=0)

    @property
    def order(self) -> int:
        return self.b_perp + self.b_parperp + self.b_par

    def as_tuple(self) -> Tuple[int, int, int]:
        return self.b_perp, self.b_parperp, self.b_par

    @property
    def label(self) -> str:
        return "(" + ",".join(str(b) for b in self.as_tuple()) + ")"

    @staticmethod
    def coerce(beta: Union["MultiIndex", Sequence[int]]) -> "MultiIndex":
        if isinstance(beta, MultiIndex):
            return beta
        b = tuple(int(k) for k in beta)
        if len(b) != 3:
            raise ConfigurationError(f"multi-index {b} must have three entries", key="beta")
        return MultiIndex(b_perp=b[0], b_parperp=b[1], b_par=b[2])

    @staticmethod
    def of_order(k: int, axes: Sequence[int] = (0, 1, 2)) -> List["MultiIndex"]:
        """All multi-indices with |β| = k supported on the given axes."""
        result = []
        for b in product(range(k + 1), repeat=3):
            if sum(b) == k and all(b[i] == 0 for i in range(3) if i not in axes):
                result.append(MultiIndex.coerce(b))
        return result


class WeightSpec(BaseModel):
    """
    Weight r_∂Ω^{d_bnd}·r_v^{a_v}·r_e^{a_e}·r_f^{a_f}.

    A feature reference left as None means the nearest feature of that type.
    Shifts t ≥ 1/2 are accepted so that frontier scans can probe them; the
    regularity bounds only cover t < 1/2 (see in_range).
    """
    model_config = ConfigDict(frozen=True)

    s: float = Field(default=0.5, gt=0.0, lt=1.0)
    t: float = Field(default=0.0, ge=0.0)
    a_v: float = 0.0
    a_e: float = 0.0
    a_f: float = 0.0
    d_bnd: float = 0.0
    vertex: Optional[int] = None
    edge: Optional[int] = None
    face: Optional[int] = None

    @property
    def in_range(self) -> bool:
        return self.t < 0.5

    @property
    def trivial(self) -> bool:
        return self.a_v == 0.0 and self.a_e == 0.0 and self.a_f == 0.0 and self.d_bnd == 0.0

    @staticmethod
    def regularity(spec: NeighborhoodSpec, beta: MultiIndex, t: float, s: float) -> "WeightSpec":
        """r_∂Ω^{−t−s} r_v^{β_∥} r_e^{β_⊨} r_f^{β_⊥} with the region's own features."""
        beta = MultiIndex.coerce(beta)
        return WeightSpec(s=s, t=t, d_bnd=-t - s, a_v=beta.b_par, a_e=beta.b_parperp, a_f=beta.b_perp,
                          vertex=spec.vertex, edge=spec.edge, face=spec.face)

    def values(self, P: Optional[Polytope], X: np.ndarray) -> np.ndarray:
        if self.trivial:
            return np.ones(len(X))
        if P is None:
            raise ConfigurationError("feature weights need a polytope region", key="weight")
        d = P.distances(X)
        w = np.ones(len(X))
        for exponent, columns, ref in ((self.a_v, d.r_v, self.vertex), (self.a_e, d.r_e, self.edge),
                                       (self.a_f, d.r_f, self.face)):
            if exponent != 0.0:
                r = columns[:, ref] if ref is not None else columns.min(axis=1)
                w *= r ** exponent
        if self.d_bnd != 0.0:
            w *= d.r_bnd ** self.d_bnd
        return w


# ---------------------------------------------------------------------- derivatives

def directional_derivative(u: ScalarField, directions: Sequence[np.ndarray], X,
                           h: Optional[float] = None, scale: float = 1.0) -> np.ndarray:
    """
    D_{g_1}...D_{g_k} u at a batch of points.

    Fields with analytic derivatives are differentiated exactly. Otherwise a
    central stencil over the 2^k sign patterns is extrapolated once:
    (4·D(h/2) − D(h))/3.

    Raises:
        ConfigurationError: k > 3 without analytic derivatives
        DomainError: a stencil point leaves the field's domain
    """
    X = u.points(X)
    k = len(directions)
    if k == 0:
        return u(X)
    if u.has_analytic:
        return u.derivative(X, directions)
    if k > FD_MAX_ORDER:
        raise ConfigurationError(f"order {k} > {FD_MAX_ORDER} needs a field with analytic derivatives", key="beta")
    if h is None:
        h = FD_EPS ** (1.0 / (k + 2)) * scale
    if h <= 0.0:
        raise ConfigurationError(f"step h={h} must be positive", key="h")
    G = np.array([np.asarray(g, dtype=float) for g in directions])
    return (4.0 * _central(u, G, X, 0.5 * h) - _central(u, G, X, h)) / 3.0


def _central(u: ScalarField, G: np.ndarray, X: np.ndarray, h: float) -> np.ndarray:
    k = len(G)
    total = np.zeros(len(X))
    for signs in product((-1.0, 1.0), repeat=k):
        shift = h * (np.asarray(signs) @ G)
        Z = X + shift
        if u.domain is not None and not np.all(u.inside(Z)):
            bad = X[np.argmin(u.inside(Z))]
            raise DomainError(f"finite-difference stencil at {bad.tolist()} leaves the domain of {u.name}")
        total += np.prod(signs) * u(Z)
    return total / (2.0 * h) ** k


def dir_derivative(u: ScalarField, frame: Frame, beta, x, h: Optional[float] = None,
                   scale: float = 1.0) -> np.ndarray:
    """D^β u = D_⊥^{β_⊥} D_⊨^{β_⊨} D_∥^{β_∥} u in the directions of a frame."""
    beta = MultiIndex.coerce(beta)
    return directional_derivative(u, frame.directions(beta.as_tuple()), x, h=h, scale=scale)


# ---------------------------------------------------------------------- shell sums and norms

class ShellSum(BaseModel):
    """Integral accumulated over dyadic shells."""
    value: float
    error: float
    divergent: bool = False
    shells: int
    sums: List[float]


def integrate_shells(region, integrand: Callable[[np.ndarray], np.ndarray],
                     tol: float = SHELL_TAIL_TOL, max_shells: int = MAX_SHELLS) -> ShellSum:
    """
    ∫ integrand over a region, shell by shell.

    Regular regions have a fixed number of shells and are integrated exactly
    by their rules. For singular regions the ratio q of consecutive shell sums
    is estimated over the last few shells; summing stops once the geometric
    tail S_k·q/(1−q) is below tol of the total, and the tail is added. Sums
    that do not decrease after DIVERGENCE_MIN_SHELLS shells are divergent.

    Args:
        region: Object with shell(k) -> (points, weights) and n_shells
        integrand: Non-negative function of a point batch
        tol: Relative tail tolerance
        max_shells: Hard limit on the number of shells

    Returns:
        ShellSum; value is math.inf when divergent
    """
    sums: List[float] = []
    total = 0.0
    q = None
    for k in count():
        if region.n_shells is not None and k >= region.n_shells:
            return ShellSum(value=total, error=0.0, shells=k, sums=sums)
        if k >= max_shells:
            break
        X, W = region.shell(k)
        S = float(np.sum(W * integrand(X))) if len(W) else 0.0
        if not math.isfinite(S):
            logger.warning(f"non-finite shell sum in shell {k}")
            return ShellSum(value=math.inf, error=math.inf, divergent=True, shells=k + 1, sums=sums + [S])
        sums.append(S)
        total += S
        if region.n_shells is not None or k < 3:
            continue
        if total == 0.0:
            return ShellSum(value=0.0, error=0.0, shells=k + 1, sums=sums)
        m = min(DIVERGENCE_SPAN, k)
        if sums[k - m] <= 0.0:
            continue
        q = (S / sums[k - m]) ** (1.0 / m)
        if k >= DIVERGENCE_MIN_SHELLS and q >= 1.0:
            logger.info(f"shell sums stopped decreasing (q={q:.4f} at shell {k}): divergent")
            return ShellSum(value=math.inf, error=math.inf, divergent=True, shells=k + 1, sums=sums)
        if q < 1.0:
            tail = S * q / (1.0 - q)
            if tail < tol * total:
                return ShellSum(value=total + tail, error=tail, shells=k + 1, sums=sums)
    tail = sums[-1] * q / (1.0 - q) if q is not None and q < 1.0 else math.inf
    logger.warning(f"shell sum not converged after {max_shells} shells; geometric tail {tail:.3e}")
    if not math.isfinite(tail):
        return ShellSum(value=math.inf, error=math.inf, divergent=True, shells=len(sums), sums=sums)
    return ShellSum(value=total + tail, error=tail, shells=len(sums), sums=sums)


class NormResult(BaseModel):
    """Weighted L² norm with the error estimate of its squared shell sum."""
    value: float
    squared: float
    error: float
    divergent: bool = False
    shells: int
    sums: List[float] = []


def norm_from_sum(total: ShellSum) -> NormResult:
    if total.divergent:
        return NormResult(value=math.inf, squared=math.inf, error=math.inf, divergent=True,
                          shells=total.shells, sums=total.sums)
    value = math.sqrt(max(total.value, 0.0))
    error = total.error / (2.0 * value) if value > 0.0 else 0.0
    return NormResult(value=value, squared=total.value, error=error, shells=total.shells, sums=total.sums)


def weighted_norm(u: ScalarField, region, w: Optional[WeightSpec] = None, beta=(0, 0, 0),
                  frame: Optional[Frame] = None, directions: Optional[Sequence[np.ndarray]] = None) -> NormResult:
    """
    ‖weight·D^β u‖_{L²(region)}.

    Args:
        u: Field
        region: Neighborhood, ball, box or cylinder region
        w: Weight; None means no weight
        beta: Multi-index along the frame directions
        frame: Frame of the region; the canonical axes when omitted
        directions: Explicit derivative directions, for fields in more than three variables

    Returns:
        NormResult, flagged divergent when the shell sums do not decay
    """
    w = w or WeightSpec()
    if directions is None:
        frame = frame or CANONICAL_FRAME
        directions = frame.directions(MultiIndex.coerce(beta).as_tuple())
    P = getattr(region, "polytope", None)

    def integrand(X: np.ndarray) -> np.ndarray:
        values = directional_derivative(u, directions, X) * w.values(P, X)
        return values * values

    return norm_from_sum(integrate_shells(region, integrand))


# ---------------------------------------------------------------------- Slobodeckij seminorm

class SlobodeckijEstimate(BaseModel):
    """Monte-Carlo estimate of |u|²_{H^t} with its standard error."""
    value: float
    stderr: float
    samples: int
    t: float

    @property
    def relative_error(self) -> float:
        return self.stderr / self.value if self.value > 0.0 else 0.0


def slobodeckij(u: ScalarField, region, t: float, budget: int = MC_BUDGET, seed: int = ROOT_SEED,
                job: str = "slobodeckij") -> SlobodeckijEstimate:
    """
    |u|²_{H^t(D)} = ∫_D∫_D |u(x) − u(z)|²/|x − z|^{d+2t} dz dx by Monte Carlo.

    x is uniform in D and z = x + ρθ with θ uniform on the sphere and ρ drawn
    with density ∝ ρ^{1−2t} on (0, diam D), which cancels the singularity of
    the kernel for Lipschitz integrands; pairs with z outside D contribute 0.

    Args:
        u: Field on the region
        region: Bounded region with sample, contains, volume, diameter
        t: Order in (0, 1)
        budget: Number of sample pairs
        seed: Root seed
        job: Name of the random stream

    Raises:
        ConfigurationError: t outside (0, 1) or budget < 2
    """
    if not 0.0 < t < 1.0:
        raise ConfigurationError(f"t={t} must lie in (0, 1)", key="t")
    if budget < 2:
        raise ConfigurationError(f"budget={budget} must be at least 2", key="budget")
    rng = make_rng(seed, job)
    d = region.dim
    R = region.diameter
    b = 1.0 - 2.0 * t
    X = region.sample(budget, rng)
    rho = R * rng.random(budget) ** (1.0 / (b + 1.0))
    if d == 1:
        theta = rng.choice([-1.0, 1.0], size=(budget, 1))
    else:
        theta = rng.standard_normal((budget, d))
        theta /= np.linalg.norm(theta, axis=1, keepdims=True)
    Z = X + rho[:, None] * theta
    inside = region.contains(Z)
    diff = np.zeros(budget)
    diff[inside] = u(X[inside]) - u(Z[inside])
    density = (b + 1.0) * rho ** b / R ** (b + 1.0)
    g = region.volume * sphere_area(d) * diff ** 2 * rho ** (-1.0 - 2.0 * t) / density
    value = float(np.mean(g))
    stderr = float(np.std(g, ddof=1) / math.sqrt(budget))
    return SlobodeckijEstimate(value=value, stderr=stderr, samples=budget, t=t)
