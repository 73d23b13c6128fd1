#!/usr/bin/env python
"""
Scalar fields on R^d.

A field evaluates on point batches of shape (N, dim). Symbolic fields carry a
sympy expression and return exact directional derivatives of any order;
callable fields only evaluate and are differentiated by finite differences.
Fields form a vector space: sums and scalar multiples are fields again.
"""

import logging
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import sympy as sp

from errors import DomainError

logger = logging.getLogger(__name__)

X1, X2, X3 = sp.symbols("x1 x2 x3", real=True)
Y = sp.Symbol("y", positive=True)
SPACE = (X1, X2, X3)


def space_symbols(dim: int) -> Tuple[sp.Symbol, ...]:
    """Coordinate symbols x1..x_dim."""
    if dim == 3:
        return SPACE
    return tuple(sp.symbols(" ".join(f"x{i + 1}" for i in range(dim)), real=True, seq=True))


class Support(NamedTuple):
    """Ball containing the support of a field."""
    center: np.ndarray
    radius: float


class Field:
    """
    Base class of all fields.

    Attributes:
        dim: Number of variables
        name: Label used in reports
        support: Optional ball outside which the field vanishes
        domain: Optional mask function; points outside may not be evaluated
    """
    has_analytic = False

    def __init__(self, dim: int, name: str = "field", support: Optional[Support] = None,
                 domain: Optional[Callable[[np.ndarray], np.ndarray]] = None):
        self.dim = int(dim)
        self.name = name
        self.support = support
        self.domain = domain

    def points(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.dim == 1 and X.ndim <= 1:
            X = X.reshape(-1, 1)
        X = np.atleast_2d(X)
        if X.shape[1] != self.dim:
            raise DomainError(f"{self.name} takes points of dimension {self.dim}, got {X.shape[1]}")
        return X

    def __call__(self, X) -> np.ndarray:
        return self._evaluate(self.points(X))

    def _evaluate(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inside(self, X) -> np.ndarray:
        """Mask of points where the field may be evaluated."""
        X = self.points(X)
        if self.domain is None:
            return np.ones(len(X), dtype=bool)
        return np.asarray(self.domain(X), dtype=bool)

    def derivative(self, X, directions: Sequence[np.ndarray]) -> np.ndarray:
        """Iterated directional derivative D_{g_1}...D_{g_k} at X (analytic fields only)."""
        raise NotImplementedError(f"{self.name} has no analytic derivatives")

    def partial(self, X, beta: Sequence[int]) -> np.ndarray:
        """Coordinate partial derivative ∂^β."""
        eye = np.eye(self.dim)
        directions = [eye[i] for i, k in enumerate(beta) for _ in range(int(k))]
        return self.derivative(X, directions)

    def gradient(self, X) -> np.ndarray:
        eye = np.eye(self.dim)
        return np.column_stack([self.derivative(X, [eye[i]]) for i in range(self.dim)])

    def __add__(self, other: "Field") -> "Field":
        return LinearCombination([(1.0, self), (1.0, other)])

    def __sub__(self, other: "Field") -> "Field":
        return LinearCombination([(1.0, self), (-1.0, other)])

    def __neg__(self) -> "Field":
        return LinearCombination([(-1.0, self)])

    def __mul__(self, scalar: float) -> "Field":
        return LinearCombination([(float(scalar), self)])

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r}, dim={self.dim})"


def _as_array(value, n: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()


class SymbolicField(Field):
    """
    Field given by a sympy expression in the listed symbols.

    Derivative expressions are built once per direction tuple and compiled
    with lambdify; later calls reuse them.
    """
    has_analytic = True

    def __init__(self, expr, symbols: Sequence[sp.Symbol], name: str = "field",
                 support: Optional[Support] = None, domain=None):
        super().__init__(len(symbols), name=name, support=support, domain=domain)
        self.expr = sp.sympify(expr)
        self.symbols = tuple(symbols)
        self._exprs: Dict[Tuple, sp.Expr] = {(): self.expr}
        self._compiled: Dict[Tuple, Callable] = {}

    @staticmethod
    def _key(directions: Sequence[np.ndarray]) -> Tuple:
        return tuple(tuple(round(float(c), 15) + 0.0 for c in np.ravel(g)) for g in directions)

    def expression(self, directions: Sequence[np.ndarray] = ()) -> sp.Expr:
        """Sympy expression of D_{g_1}...D_{g_k} u."""
        key = self._key(directions)
        if key not in self._exprs:
            previous = self.expression([np.array(g) for g in key[:-1]])
            g = key[-1]
            terms = [sp.Float(c) * sp.diff(previous, x) for c, x in zip(g, self.symbols) if c != 0.0]
            self._exprs[key] = sp.Add(*terms) if terms else sp.Integer(0)
        return self._exprs[key]

    def _function(self, key: Tuple) -> Callable:
        if key not in self._compiled:
            expr = self.expression([np.array(g) for g in key])
            self._compiled[key] = sp.lambdify(self.symbols, expr, modules="numpy")
        return self._compiled[key]

    def _evaluate(self, X: np.ndarray) -> np.ndarray:
        with np.errstate(all="ignore"):
            return _as_array(self._function(())(*X.T), len(X))

    def derivative(self, X, directions: Sequence[np.ndarray]) -> np.ndarray:
        X = self.points(X)
        key = self._key(directions)
        with np.errstate(all="ignore"):
            return _as_array(self._function(key)(*X.T), len(X))

    def substitute(self, symbol: sp.Symbol, value: float, name: Optional[str] = None) -> "SymbolicField":
        """Field in the remaining symbols with one symbol fixed, e.g. the trace y = 0."""
        rest = [x for x in self.symbols if x != symbol]
        support = self.support
        if support is not None and len(support.center) == self.dim:
            keep = [i for i, x in enumerate(self.symbols) if x != symbol]
            support = Support(np.asarray(support.center)[keep], support.radius)
        return SymbolicField(self.expr.subs(symbol, value), rest, name=name or f"{self.name}|{symbol}={value}",
                             support=support)


class CallableField(Field):
    """Field given by a vectorized function of a point batch; derivatives by finite differences."""

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], dim: int, name: str = "field",
                 support: Optional[Support] = None, domain=None):
        super().__init__(dim, name=name, support=support, domain=domain)
        self.func = func

    def _evaluate(self, X: np.ndarray) -> np.ndarray:
        return _as_array(self.func(X), len(X))


class LinearCombination(Field):
    """Σ c_k u_k; analytic when every term is."""

    def __init__(self, terms: List[Tuple[float, Field]]):
        flat: List[Tuple[float, Field]] = []
        for c, u in terms:
            if isinstance(u, LinearCombination):
                flat.extend((c * c2, u2) for c2, u2 in u.terms)
            else:
                flat.append((float(c), u))
        dims = {u.dim for _, u in flat}
        if len(dims) != 1:
            raise DomainError(f"cannot combine fields of dimensions {sorted(dims)}")
        name = " + ".join(f"{c:g}*{u.name}" for c, u in flat)
        super().__init__(dims.pop(), name=name, support=_union_support([u.support for _, u in flat]),
                         domain=_intersect_domains([u.domain for _, u in flat]))
        self.terms = flat
        self.has_analytic = all(u.has_analytic for _, u in flat)

    def _evaluate(self, X: np.ndarray) -> np.ndarray:
        total = np.zeros(len(X))
        for c, u in self.terms:
            total += c * u(X)
        return total

    def derivative(self, X, directions: Sequence[np.ndarray]) -> np.ndarray:
        if not self.has_analytic:
            return super().derivative(X, directions)
        X = self.points(X)
        total = np.zeros(len(X))
        for c, u in self.terms:
            total += c * u.derivative(X, directions)
        return total


def _union_support(supports: List[Optional[Support]]) -> Optional[Support]:
    if any(s is None for s in supports):
        return None
    center = np.mean([s.center for s in supports], axis=0)
    radius = max(np.linalg.norm(np.asarray(s.center) - center) + s.radius for s in supports)
    return Support(center, float(radius))


def _intersect_domains(domains):
    active = [d for d in domains if d is not None]
    if not active:
        return None
    return lambda X: np.logical_and.reduce([d(X) for d in active])


# ---------------------------------------------------------------------- builders

def constant(value: float, dim: int = 3) -> SymbolicField:
    return SymbolicField(sp.Float(value), space_symbols(dim), name=f"const({value:g})")


def monomial(exponents: Sequence[int], coefficient: float = 1.0) -> SymbolicField:
    """c·x1^k1·...·xd^kd."""
    xs = space_symbols(len(exponents))
    expr = sp.Float(coefficient) * sp.Mul(*[x ** int(k) for x, k in zip(xs, exponents)])
    return SymbolicField(expr, xs, name=f"x^{tuple(exponents)}")


def _squared_distance(xs, center) -> sp.Expr:
    return sp.Add(*[(x - sp.Float(c)) ** 2 for x, c in zip(xs, center)])


def polynomial_bump(center: Sequence[float], radius: float, power: int = 4, amplitude: float = 1.0) -> SymbolicField:
    """
    a·(1 − |x−c|²/R²)^k inside B_R(c), zero outside.

    C^{k−1} across the sphere |x−c| = R; k = 4 is smooth enough for the
    second-order stencils of the principal-value integral.
    """
    xs = space_symbols(len(center))
    t = _squared_distance(xs, center) / sp.Float(radius) ** 2
    expr = sp.Piecewise((sp.Float(amplitude) * (1 - t) ** power, t < 1), (0, True))
    return SymbolicField(expr, xs, name=f"bump(c={list(center)},R={radius:g})",
                         support=Support(np.asarray(center, dtype=float), float(radius)))


def gaussian(center: Sequence[float], width: float, amplitude: float = 1.0,
             axes: Optional[Sequence[int]] = None, dim: Optional[int] = None) -> SymbolicField:
    """a·exp(−Σ_{i∈axes}(x_i − c_i)²/σ²); all axes by default."""
    dim = dim or len(center)
    xs = space_symbols(dim)
    axes = range(dim) if axes is None else axes
    r2 = sp.Add(*[(xs[i] - sp.Float(center[i])) ** 2 for i in axes])
    return SymbolicField(sp.Float(amplitude) * sp.exp(-r2 / sp.Float(width) ** 2), xs,
                         name=f"gauss(c={list(center)},w={width:g})")


def power_cap(s: float, dim: int, radius: float = 1.0, amplitude: float = 1.0) -> SymbolicField:
    """a·(1 − |x|²/R²)^s_+ on the ball B_R(0)."""
    xs = space_symbols(dim)
    t = _squared_distance(xs, np.zeros(dim)) / sp.Float(radius) ** 2
    expr = sp.Piecewise((sp.Float(amplitude) * (1 - t) ** sp.Float(s), t < 1), (0, True))
    return SymbolicField(expr, xs, name=f"cap(s={s:g},R={radius:g})",
                         support=Support(np.zeros(dim), float(radius)))


def plane_distance(normal_in: Sequence[float], point: Sequence[float]) -> sp.Expr:
    """Signed distance to a plane, positive on the side the unit normal points to."""
    return sp.Add(*[sp.Float(n) * (x - sp.Float(p)) for n, x, p in zip(normal_in, SPACE, point)])


def line_distance(direction: Sequence[float], point: Sequence[float]) -> sp.Expr:
    """Distance to a line through point with unit direction."""
    rel = [x - sp.Float(p) for x, p in zip(SPACE, point)]
    along = sp.Add(*[sp.Float(d) * r for d, r in zip(direction, rel)])
    return sp.sqrt(sp.Add(*[r ** 2 for r in rel]) - along ** 2)


def point_distance(point: Sequence[float]) -> sp.Expr:
    return sp.sqrt(_squared_distance(SPACE, point))


def face_power(s: float, normal_in: Sequence[float], point: Sequence[float],
               smooth: Optional[SymbolicField] = None) -> SymbolicField:
    """
    r_f^s·φ for the face plane through point with inward unit normal.

    Defined on the inner side of the plane only.
    """
    n = np.asarray(normal_in, dtype=float)
    p = np.asarray(point, dtype=float)
    expr = plane_distance(n, p) ** sp.Float(s)
    if smooth is not None:
        expr = expr * smooth.expr
    return SymbolicField(expr, SPACE, name=f"r_f^{s:g}" + ("" if smooth is None else f"*{smooth.name}"),
                         domain=lambda X: (X - p) @ n > 0.0)


def corner_singular(vertex: Sequence[float], edge_direction: Sequence[float], normal_in: Sequence[float],
                    a: float, b: float, s: float, smooth: Optional[SymbolicField] = None) -> SymbolicField:
    """
    r_v^a·ρ_ve^b·ρ_ef^s·φ near a vertex-edge-face corner.

    The edge is the ray from the vertex along edge_direction and the face the
    plane through the vertex with the given inward normal, so the distances are
    exact in the corner's vertex-edge-face region.
    """
    v = np.asarray(vertex, dtype=float)
    r_v = point_distance(v)
    r_e = line_distance(edge_direction, v)
    r_f = plane_distance(normal_in, v)
    expr = r_v ** sp.Float(a) * (r_e / r_v) ** sp.Float(b) * (r_f / r_e) ** sp.Float(s)
    if smooth is not None:
        expr = expr * smooth.expr
    n = np.asarray(normal_in, dtype=float)
    return SymbolicField(expr, SPACE, name=f"corner(a={a:g},b={b:g},s={s:g})",
                         domain=lambda X: (X - v) @ n > 0.0)
