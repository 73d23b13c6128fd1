#!/usr/bin/env python
"""
Manufactured triples (U, F, f) for the inequality harness.

Every triple satisfies −div(y^α∇U) = F on the half-space and
f = −d_s·lim_{y→0} y^α ∂_y U. Symbolic triples start from a closed-form U
and derive F and f with sympy; extension triples take the extension of a
compactly supported trace, for which F = 0 and f = (−Δ)^s u.
"""

import logging
import math
from typing import List, Optional

import numpy as np
import sympy as sp
from pydantic import BaseModel

from config import CYLINDER_HEIGHT, ROOT_SEED
from errors import ConfigurationError
from numerics.extension import ExtensionField, ExtensionParams, _extrapolate, dtn, frac_laplacian_direct
from numerics.fields import Y as Y_SYM, CallableField, SymbolicField, Support, space_symbols
from numerics.fields import Field as ScalarField
from numerics.regions import BallRegion, BoxRegion
from utils import make_rng

logger = logging.getLogger(__name__)

CHECK_POINTS = 5
FLUX_RTOL = 1e-2
DIVERGENCE_RTOL = 1e-8
# Heights of the y → 0 ladder for the weighted flux of symbolic triples
FLUX_HEIGHTS = (1e-2, 5e-3, 2.5e-3)


def _rational(s: float) -> sp.Rational:
    return sp.Rational(repr(float(s)))


class ManufacturedTriple:
    """
    A consistent triple on R^d × (0, Y).

    Attributes:
        name: Label used in report ids
        s: Fractional order
        U: Field in (x, y)
        F: Field in (x, y)
        f: Field in x
        kind: "symbolic" or "extension"
        Y: Height of the cylinders the triple is measured on
        support: Ball containing the x-support of the trace, when known
    """

    def __init__(self, name: str, s: float, U: ScalarField, F: ScalarField, f: ScalarField, kind: str,
                 Y: float = CYLINDER_HEIGHT, support: Optional[Support] = None):
        if U.dim != f.dim + 1 or F.dim != U.dim:
            raise ConfigurationError(f"triple {name}: U, F need one variable more than f", key="triple")
        self.name = name
        self.s = float(s)
        self.U = U
        self.F = F
        self.f = f
        self.kind = kind
        self.Y = float(Y)
        self.support = support

    @property
    def alpha(self) -> float:
        return 1.0 - 2.0 * self.s

    @property
    def dim(self) -> int:
        return self.f.dim

    def __repr__(self) -> str:
        return f"ManufacturedTriple({self.name!r}, kind={self.kind}, s={self.s:g}, d={self.dim})"


def symbolic_triple(expr, s: float, name: str, dim: int = 3, Y: float = CYLINDER_HEIGHT,
                    support: Optional[Support] = None) -> ManufacturedTriple:
    """
    Triple of a closed-form U(x1, ..., xd, y).

    Raises:
        ConfigurationError: the weighted flux has no finite limit at y = 0
    """
    xs = space_symbols(dim)
    symbols = (*xs, Y_SYM)
    expr = sp.sympify(expr)
    alpha = 1 - 2 * _rational(s)
    weight = Y_SYM ** alpha
    F_expr = -sp.Add(*[sp.diff(weight * sp.diff(expr, x), x) for x in symbols])
    flux = sp.powsimp(weight * sp.diff(expr, Y_SYM), force=True)
    trace_flux = sp.limit(flux, Y_SYM, 0, "+") if flux.has(Y_SYM) else flux
    if trace_flux.has(sp.oo, -sp.oo, sp.zoo, sp.nan):
        raise ConfigurationError(f"y^α ∂_y U of {name} has no finite trace", key="triple")
    d_s = ExtensionParams(s=s, d=dim).d_s
    U = SymbolicField(expr, symbols, name=name)
    F = SymbolicField(F_expr, symbols, name=f"F[{name}]")
    f = SymbolicField(-sp.Float(d_s) * trace_flux, xs, name=f"f[{name}]", support=support)
    logger.debug(f"symbolic triple {name}: F = {F_expr}, f = {f.expr}")
    return ManufacturedTriple(name, s, U, F, f, "symbolic", Y=Y, support=support)


def polynomial_triple(phi: SymbolicField, s: float, b: float = 1.0, Y: float = CYLINDER_HEIGHT) -> ManufacturedTriple:
    """
    U = φ(x)·(1 + b·y^{2s}).

    ∂_y(y^α ∂_y y^{2s}) = 0, so F = −y^α Δφ·(1 + b·y^{2s}) and f = −2s·b·d_s·φ.
    """
    if tuple(phi.symbols) != space_symbols(phi.dim):
        raise ConfigurationError(f"{phi.name} must be written in x1..x{phi.dim}", key="phi")
    expr = phi.expr * (1 + sp.Float(b) * Y_SYM ** (2 * _rational(s)))
    return symbolic_triple(expr, s, f"{phi.name}*(1+{b:g}y^2s)", dim=phi.dim, Y=Y, support=phi.support)


def extension_triple(u: ScalarField, s: float, Y: float = CYLINDER_HEIGHT) -> ManufacturedTriple:
    """U = extension of u, F = 0, f = (−Δ)^s u through the Dirichlet-to-Neumann map."""
    U = ExtensionField(u, s, Y)
    symbols = (*space_symbols(u.dim), Y_SYM)
    F = SymbolicField(sp.Integer(0), symbols, name="0")

    def f_values(X: np.ndarray) -> np.ndarray:
        return np.array([dtn(u, x, s) for x in X])

    f = CallableField(f_values, u.dim, name=f"dtn[{u.name}]", support=u.support)
    return ManufacturedTriple(f"ext[{u.name}]", s, U, F, f, "extension", Y=Y, support=u.support)


class TripleCheck(BaseModel):
    """Result of the consistency check of one triple."""
    name: str
    kind: str
    points: List[List[float]]
    flux_error: float
    divergence_error: Optional[float] = None
    consistent: bool


def _flux_limit(triple: ManufacturedTriple, x: np.ndarray) -> tuple:
    d_s = ExtensionParams(s=triple.s, d=triple.dim).d_s
    e_y = np.eye(triple.dim + 1)[-1]
    Z = np.array([np.append(x, y) for y in FLUX_HEIGHTS])
    g = -d_s * np.asarray(FLUX_HEIGHTS) ** triple.alpha * triple.U.derivative(Z, [e_y])
    limit, _ = _extrapolate(*g)
    return limit, float(np.max(np.abs(g)))


def _divergence_error(triple: ManufacturedTriple, X: np.ndarray, rng: np.random.Generator) -> float:
    """F against the product rule y^α Σ∂_i²U + α y^{α−1} ∂_y U built from analytic derivatives."""
    y = rng.uniform(0.05 * triple.Y, triple.Y, size=len(X))
    Z = np.column_stack([X, y])
    eye = np.eye(triple.dim + 1)
    U, a = triple.U, triple.alpha
    second = np.column_stack([U.derivative(Z, [e, e]) for e in eye])
    dy = U.derivative(Z, [eye[-1]])
    product_rule = -(y ** a * second.sum(axis=1) + a * y ** (a - 1.0) * dy)
    scale = y ** a * np.abs(second).sum(axis=1) + np.abs(a * y ** (a - 1.0) * dy)
    F = triple.F(Z)
    scale = np.maximum(np.maximum(scale, np.abs(F)), np.finfo(float).tiny)
    return float(np.max(np.abs(F - product_rule) / scale))


def check_triple(triple: ManufacturedTriple, n: int = CHECK_POINTS, seed: int = ROOT_SEED,
                 rtol: float = FLUX_RTOL, region=None) -> TripleCheck:
    """
    Recompute f and F at n random interior points.

    Symbolic triples: f against the extrapolated weighted flux −d_s y^α ∂_y U,
    and F against the product-rule divergence. Extension triples: the
    Dirichlet-to-Neumann f against the direct principal-value operator.

    Args:
        triple: Triple to check
        n: Number of points
        seed: Root seed
        rtol: Relative tolerance for f
        region: Where to draw the points; half the support ball by default
    """
    if region is None:
        if triple.support is not None:
            region = BallRegion(triple.support.center, 0.5 * triple.support.radius)
        else:
            region = BoxRegion(np.zeros(triple.dim), np.ones(triple.dim))
    rng = make_rng(seed, f"triple:{triple.name}")
    X = region.sample(n, rng)
    flux_error = 0.0
    for x in X:
        if triple.kind == "extension":
            registered = float(triple.f(x[None, :])[0])
            other = frac_laplacian_direct(triple.U.trace, x, triple.s)
            scale = max(abs(registered), abs(other))
        else:
            registered = float(triple.f(x[None, :])[0])
            other, ladder = _flux_limit(triple, x)
            scale = max(abs(registered), abs(other), ladder)
        if scale > 0.0:
            flux_error = max(flux_error, abs(registered - other) / scale)
    divergence_error = _divergence_error(triple, X, rng) if triple.kind == "symbolic" else None
    consistent = flux_error <= rtol and (divergence_error is None or divergence_error <= DIVERGENCE_RTOL)
    if not consistent:
        logger.warning(f"triple {triple.name} inconsistent: flux error {flux_error:.3e}, "
                       f"divergence error {divergence_error}")
    return TripleCheck(name=triple.name, kind=triple.kind, points=X.tolist(), flux_error=flux_error,
                       divergence_error=divergence_error, consistent=consistent and math.isfinite(flux_error))
