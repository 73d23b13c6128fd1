#!/usr/bin/env python
"""
Galerkin solver for (−Δ)^s u = f in Ω, u = 0 outside Ω, with continuous
piecewise-linear elements.

The bilinear form is split over simplex pairs,

    a(φ_i, φ_j) = C(d,s)/2 [ Σ_T I_TT + 2 Σ_{T<T'} I_TT' + 2 Σ_T ∫_T φ_i φ_j κ ],

    I_TT' = ∫_T ∫_T' (φ_i(x) − φ_i(z))(φ_j(x) − φ_j(z)) |x − z|^{−d−2s} dz dx,
    κ(x)  = ∫_{Ω^c} |x − z|^{−d−2s} dz = (1/2s) ∫_{S^{d−1}} ρ_Ω(x, θ)^{−2s} dθ,

where ρ_Ω(x, θ) is the distance from x to ∂Ω along θ (Ω convex).

Pairs that share a vertex are integrated with an outer rule in x and, along
every ray from x, the exact radial moments ∫ρ^{k−1−2s}dρ (k = 0, 1, 2) over
the segment where the ray crosses the second simplex: the difference of two
linear functions along a ray is linear in ρ. Separated pairs use tensor
rules. Local matrices depend only on the relative position of the two
simplices and are computed once per distinct configuration.
"""

import csv
import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.linalg import LinAlgError, cho_factor, cho_solve, eigh
from scipy.special import roots_jacobi
from tqdm import tqdm

from config import GAUSS_IDENTICAL, GAUSS_SEPARATED, GAUSS_TOUCHING
from errors import AssemblyError, ConfigurationError
from numerics.extension import ExtensionParams, sphere_rule
from numerics.fields import CallableField
from numerics.fields import Field as ScalarField
from numerics.mesh import Mesh
from numerics.quadrature import MultiIndex, composite_gauss, gauss_legendre, graded_breaks, weighted_norm

logger = logging.getLogger(__name__)

# Directions per polar Gauss node for the ray rules in 3D (2n² directions in all)
RAY_DIRECTIONS = 8
# Separated pairs further apart than this many diameters use FAR_ORDER points per direction
FAR_SEPARATION = 2.0
FAR_ORDER = 2
# Grading of the 1D outer rule toward both ends of an element
GRADED_LEVELS = 12
SEPARATED_BATCH = 256
RESIDUAL_TOL = 1e-10


# ---------------------------------------------------------------------- reference rules

def simplex_rule(d: int, n: int, graded: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    Quadrature on the reference simplex as barycentric points (Q, d+1) and
    weights summing to 1, so that ∫_T g = |T|·Σ w g.

    In 3D a collapsed Gauss–Jacobi product rule; in 1D Gauss–Legendre,
    optionally graded toward both ends.
    """
    if d == 1:
        breaks = graded_breaks(0.0, 1.0, "both", levels=GRADED_LEVELS) if graded else np.array([0.0, 1.0])
        t, w = composite_gauss(breaks, n)
        return np.column_stack([1.0 - t, t]), w
    if d != 3:
        raise ConfigurationError(f"simplex rules are implemented for d in (1, 3), got {d}", key="d")
    a, wa = roots_jacobi(n, 2.0, 0.0)
    b, wb = roots_jacobi(n, 1.0, 0.0)
    c, wc = gauss_legendre(0.0, 1.0, n)
    u, v = 0.5 * (1.0 + a), 0.5 * (1.0 + b)
    wa, wb = wa / 8.0, wb / 4.0
    U, V, W = np.meshgrid(u, v, c, indexing="ij")
    weights = (wa[:, None, None] * wb[None, :, None] * wc[None, None, :]).ravel() * 6.0
    x = U.ravel()
    y = ((1.0 - U) * V).ravel()
    z = ((1.0 - U) * (1.0 - V) * W).ravel()
    return np.column_stack([1.0 - x - y - z, x, y, z]), weights


def _moments(r_in: np.ndarray, r_out: np.ndarray, s: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """∫_{r_in}^{r_out} ρ^{k−1−2s} dρ for k = 0, 1, 2."""
    result = []
    for k in range(3):
        e = k - 2.0 * s
        if abs(e) < 1e-14:
            result.append(np.log(r_out / r_in))
        else:
            result.append((r_out ** e - r_in ** e) / e)
    return tuple(result)


# ---------------------------------------------------------------------- local matrices

class _PairIntegrator:
    """Local matrices of I_TT' in the concatenated node order (nodes of T, then nodes of T')."""

    def __init__(self, mesh: Mesh, s: float):
        self.mesh = mesh
        self.s = s
        d = mesh.dim
        self.d = d
        self.graded = d == 1
        self.touching_rule = simplex_rule(d, GAUSS_TOUCHING, graded=self.graded)
        self.identical_rule = simplex_rule(d, GAUSS_IDENTICAL, graded=self.graded)
        self.near_rule = simplex_rule(d, GAUSS_SEPARATED)
        self.far_rule = simplex_rule(d, FAR_ORDER if d == 3 else GAUSS_SEPARATED)
        self._mapped = {id(rule): mesh.mapped_points(rule[0]) for rule in (self.near_rule, self.far_rule)}
        self.dirs, self.dir_weights = sphere_rule(d, RAY_DIRECTIONS)

    def _vertices(self, k: int) -> np.ndarray:
        return self.mesh.nodes[self.mesh.simplices[k]]

    def identical(self, k: int) -> np.ndarray:
        """I_TT: only the quadratic radial moment survives, over rays starting inside T."""
        lam, w = self.identical_rule
        V = self._vertices(k)
        G = self.mesh.gradients[k]
        X = lam @ V
        r_out = self._clip(X, G, V[0], self.dirs)[1]
        m2 = r_out ** (2.0 - 2.0 * self.s) / (2.0 - 2.0 * self.s)
        B = self.dirs @ G.T
        weights = (w[:, None] * m2).sum(axis=0) * self.dir_weights
        return self.mesh.volumes[k] * (B.T * weights) @ B

    def _clip(self, X: np.ndarray, G: np.ndarray, V0: np.ndarray, dirs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Entry and exit distances (Q, R) of rays x + ρθ through the simplex with barycentric gradients G."""
        lam = (X - V0) @ G.T
        lam[:, 0] += 1.0
        speed = dirs @ G.T
        with np.errstate(divide="ignore", invalid="ignore"):
            cross = -lam[:, None, :] / speed[None, :, :]
            r_in = np.where(speed[None] > 0.0, cross, 0.0).max(axis=2)
            r_out = np.where(speed[None] < 0.0, cross, np.inf).min(axis=2)
        return np.maximum(r_in, 0.0), r_out

    def touching(self, k: int, l: int) -> np.ndarray:
        """I_TT' for distinct simplices sharing at least one vertex."""
        d, s = self.d, self.s
        lam, w = self.touching_rule
        V, Vp = self._vertices(k), self._vertices(l)
        Gp = self.mesh.gradients[l]
        X = lam @ V
        r_in, r_out = self._clip(X, Gp, Vp[0], self.dirs)
        hit = r_out > r_in * (1.0 + 1e-12)
        q_idx, t_idx = np.nonzero(hit)
        m0, m1, m2 = _moments(r_in[hit], r_out[hit], s)
        lam_p = (X - Vp[0]) @ Gp.T
        lam_p[:, 0] += 1.0
        A = np.concatenate([lam, -lam_p], axis=1)[q_idx]
        B = np.concatenate([np.zeros((len(self.dirs), d + 1)), self.dirs @ Gp.T], axis=1)[t_idx]
        weights = w[q_idx] * self.dir_weights[t_idx]
        local = (A.T * (weights * m0)) @ A - (A.T * (weights * m1)) @ B - (B.T * (weights * m1)) @ A \
            + (B.T * (weights * m2)) @ B
        return self.mesh.volumes[k] * local

    def separated(self, pairs: np.ndarray, far: np.ndarray) -> np.ndarray:
        """I_TT' for a batch of separated pairs, (P, 2(d+1), 2(d+1))."""
        result = np.empty((len(pairs), 2 * (self.d + 1), 2 * (self.d + 1)))
        for mask, rule in ((far, self.far_rule), (~far, self.near_rule)):
            if not np.any(mask):
                continue
            lam, w = rule
            P = pairs[mask]
            X = self._mapped[id(rule)][P[:, 0]]
            Z = self._mapped[id(rule)][P[:, 1]]
            dist = np.linalg.norm(X[:, :, None, :] - Z[:, None, :, :], axis=-1)
            K = w[None, :, None] * w[None, None, :] * dist ** (-self.d - 2.0 * self.s)
            Kx, Kz = K.sum(axis=2), K.sum(axis=1)
            xx = np.einsum("pq,qi,qj->pij", Kx, lam, lam)
            zz = np.einsum("pr,ri,rj->pij", Kz, lam, lam)
            xz = np.einsum("qi,pqr,rj->pij", lam, K, lam)
            vol = (self.mesh.volumes[P[:, 0]] * self.mesh.volumes[P[:, 1]])[:, None, None]
            n = self.d + 1
            block = np.empty((len(P), 2 * n, 2 * n))
            block[:, :n, :n] = xx
            block[:, n:, n:] = zz
            block[:, :n, n:] = -xz
            block[:, n:, :n] = -np.transpose(xz, (0, 2, 1))
            result[mask] = vol * block
        return result

    def complement(self, k: int) -> np.ndarray:
        """∫_T λ_i λ_j κ for one simplex."""
        lam, w = self.touching_rule
        V = self._vertices(k)
        X = lam @ V
        rho = self.mesh.exit_distance(X, self.dirs)
        kappa = (rho ** (-2.0 * self.s)) @ self.dir_weights / (2.0 * self.s)
        return self.mesh.volumes[k] * (lam.T * (w * kappa)) @ lam


def _shape_ids(mesh: Mesh) -> np.ndarray:
    """Label simplices by their shape up to translation, vertex order included."""
    V = mesh.nodes[mesh.simplices]
    rel = np.round((V - V[:, :1]).reshape(len(V), -1) / mesh.h, 9)
    return np.unique(rel, axis=0, return_inverse=True)[1].reshape(-1)


def _pair_keys(mesh: Mesh, pairs: np.ndarray, shapes: np.ndarray) -> np.ndarray:
    V = mesh.nodes[mesh.simplices]
    offset = np.round((V[pairs[:, 1], 0] - V[pairs[:, 0], 0]) / mesh.h * 1e9).astype(np.int64)
    return np.column_stack([shapes[pairs[:, 0]], shapes[pairs[:, 1]], offset])


# ---------------------------------------------------------------------- assembly

class StiffnessMatrix(BaseModel):
    """Assembled a(φ_i, φ_j) over the interior nodes of a mesh."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    matrix: np.ndarray
    s: float
    nodes: np.ndarray
    distinct_pairs: int = 0


def _scatter(A: np.ndarray, position: np.ndarray, rows: np.ndarray, local: np.ndarray, factor: float) -> None:
    """A[p_i, p_j] += factor·local[i, j] for the interior positions of each pair."""
    idx = position[rows]
    I = np.repeat(idx[:, :, None], idx.shape[1], axis=2)
    J = np.repeat(idx[:, None, :], idx.shape[1], axis=1)
    keep = (I >= 0) & (J >= 0)
    np.add.at(A, (I[keep], J[keep]), factor * local[keep])


def assemble(mesh: Mesh, s: float, progress: bool = False) -> StiffnessMatrix:
    """
    Stiffness matrix of the fractional Laplacian with exterior Dirichlet data.

    Args:
        mesh: Conforming mesh of a convex domain
        s: Order in (0, 1)
        progress: Show a progress bar over distinct pair configurations

    Returns:
        StiffnessMatrix over mesh.interior

    Raises:
        ConfigurationError: s outside (0, 1)
    """
    if not 0.0 < s < 1.0:
        raise ConfigurationError(f"order s={s} must lie in (0, 1)", key="s")
    params = ExtensionParams(s=s, d=mesh.dim)
    interior = mesh.interior
    position = np.full(mesh.n_nodes, -1, dtype=np.int64)
    position[interior] = np.arange(len(interior))
    A = np.zeros((len(interior), len(interior)))
    integrator = _PairIntegrator(mesh, s)
    simplices = mesh.simplices
    active = np.any(position[simplices] >= 0, axis=1)
    logger.info(f"Assembling {mesh.name}: {mesh.n_simplices} simplices, {len(interior)} unknowns, s={s}")

    incidence = np.zeros((mesh.n_simplices, mesh.n_nodes), dtype=np.int32)
    incidence[np.repeat(np.arange(mesh.n_simplices), mesh.dim + 1), simplices.ravel()] = 1
    shared = incidence @ incidence.T
    k_idx, l_idx = np.triu_indices(mesh.n_simplices, k=1)
    keep = active[k_idx] | active[l_idx]
    pairs = np.column_stack([k_idx[keep], l_idx[keep]])
    touching = shared[pairs[:, 0], pairs[:, 1]] > 0

    shapes = _shape_ids(mesh)
    diameters = mesh.diameters
    same: Dict[int, np.ndarray] = {}
    for k in tqdm(np.flatnonzero(active), desc="identical", disable=not progress):
        if shapes[k] not in same:
            same[shapes[k]] = integrator.identical(k)
        _scatter(A, position, simplices[[k]], same[shapes[k]][None], 1.0)
        _scatter(A, position, simplices[[k]], integrator.complement(k)[None], 2.0)

    distinct = 0
    for group, label in ((touching, "touching"), (~touching, "separated")):
        P = pairs[group]
        if not len(P):
            continue
        keys, first, inverse = np.unique(_pair_keys(mesh, P, shapes), axis=0, return_index=True, return_inverse=True)
        inverse = inverse.reshape(-1)
        distinct += len(keys)
        reps = P[first]
        if label == "touching":
            local = np.stack([integrator.touching(k, l)
                              for k, l in tqdm(reps, desc=label, disable=not progress)])
        else:
            centers = mesh.nodes[simplices].mean(axis=1)
            gap = np.linalg.norm(centers[reps[:, 0]] - centers[reps[:, 1]], axis=1)
            far = gap > FAR_SEPARATION * diameters[reps].max(axis=1)
            local = np.concatenate([integrator.separated(reps[i:i + SEPARATED_BATCH], far[i:i + SEPARATED_BATCH])
                                    for i in tqdm(range(0, len(reps), SEPARATED_BATCH), desc=label,
                                                  disable=not progress)])
        if not np.all(np.isfinite(local)):
            bad = reps[np.flatnonzero(~np.all(np.isfinite(local), axis=(1, 2)))[0]]
            logger.warning(f"non-finite local matrix for simplex pair {bad.tolist()}")
            raise AssemblyError(f"assembly of {mesh.name} produced a non-finite panel for pair {bad.tolist()}")
        rows = np.concatenate([simplices[P[:, 0]], simplices[P[:, 1]]], axis=1)
        for start in range(0, len(P), 4096):
            stop = start + 4096
            _scatter(A, position, rows[start:stop], local[inverse[start:stop]], 2.0)

    A *= 0.5 * params.C
    A = 0.5 * (A + A.T)
    logger.info(f"Assembled {mesh.name} from {distinct} distinct pair configurations")
    return StiffnessMatrix(matrix=A, s=s, nodes=interior, distinct_pairs=distinct)


def mass_matrix(mesh: Mesh) -> np.ndarray:
    """P1 mass matrix over the interior nodes."""
    interior = mesh.interior
    position = np.full(mesh.n_nodes, -1, dtype=np.int64)
    position[interior] = np.arange(len(interior))
    n = mesh.dim + 1
    reference = (np.ones((n, n)) + np.eye(n)) / ((mesh.dim + 1) * (mesh.dim + 2))
    M = np.zeros((len(interior), len(interior)))
    _scatter(M, position, mesh.simplices, mesh.volumes[:, None, None] * reference[None], 1.0)
    return M


def load_vector(mesh: Mesh, f: ScalarField, order: int = GAUSS_IDENTICAL) -> np.ndarray:
    """(f, φ_i) over the interior nodes by per-simplex Gauss quadrature."""
    lam, w = simplex_rule(mesh.dim, order if mesh.dim == 1 else max(2, order // 2))
    X = mesh.mapped_points(lam)
    values = f(X.reshape(-1, mesh.dim)).reshape(len(X), -1)
    local = mesh.volumes[:, None] * ((values * w[None, :]) @ lam)
    b = np.zeros(mesh.n_nodes)
    np.add.at(b, mesh.simplices.ravel(), local.ravel())
    return b[mesh.interior]


def ritz_values(A: np.ndarray, M: np.ndarray, count: int = 1) -> np.ndarray:
    """Smallest generalized eigenvalues of A against the mass matrix."""
    count = min(count, len(A))
    return eigh(A, M, eigvals_only=True, subset_by_index=[0, count - 1])


# ---------------------------------------------------------------------- solutions

class Solution(BaseModel):
    """
    Galerkin solution; zero outside Ω.

    Attributes:
        mesh: Mesh of the solve
        coefficients: Values at the interior nodes
        s: Order
        residual: Relative residual of the linear solve
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    mesh: Mesh
    coefficients: np.ndarray
    s: float
    residual: float
    stiffness: Optional[np.ndarray] = None
    load: Optional[np.ndarray] = None

    @property
    def nodal_values(self) -> np.ndarray:
        values = np.zeros(self.mesh.n_nodes)
        values[self.mesh.interior] = self.coefficients
        return values

    @property
    def energy(self) -> float:
        """a(u_h, u_h)."""
        c = self.coefficients
        return float(c @ self.stiffness @ c)

    def evaluate(self, points) -> np.ndarray:
        X = np.atleast_2d(np.asarray(points, dtype=float))
        if self.mesh.dim == 1 and X.shape[1] != 1:
            X = X.reshape(-1, 1)
        closed = np.all(X @ self.mesh.normals.T <= self.mesh.offsets[None, :] + 1e-12, axis=1)
        values = np.zeros(len(X))
        if np.any(closed):
            owner, lam = self.mesh.locate(X[closed])
            values[closed] = np.sum(lam * self.nodal_values[self.mesh.simplices[owner]], axis=1)
        return values

    def as_field(self) -> ScalarField:
        return CallableField(self.evaluate, self.mesh.dim, name=f"u_h[{self.mesh.name}]")

    def to_csv(self, path: str) -> str:
        """Write node, coordinates and value, one row per mesh node."""
        coords = [f"x{i + 1}" for i in range(self.mesh.dim)]
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, dialect="excel", lineterminator="\r\n")
            writer.writerow(["node", *coords, "value"])
            for i, (x, value) in enumerate(zip(self.mesh.nodes, self.nodal_values)):
                writer.writerow([i, *(repr(float(c)) for c in x), repr(float(value))])
        return path


def solve(mesh: Mesh, f: ScalarField, s: float, stiffness: Optional[StiffnessMatrix] = None,
          progress: bool = False) -> Solution:
    """
    Galerkin solution of (−Δ)^s u = f, u = 0 outside Ω.

    Raises:
        AssemblyError: the matrix is not positive definite or the residual is too large
    """
    stiffness = stiffness or assemble(mesh, s, progress=progress)
    if abs(stiffness.s - s) > 0.0:
        raise ConfigurationError(f"stiffness matrix was assembled for s={stiffness.s}, not {s}", key="s")
    A = stiffness.matrix
    b = load_vector(mesh, f)
    if not len(b):
        raise AssemblyError(f"mesh {mesh.name} has no interior nodes")
    try:
        factor = cho_factor(A)
    except LinAlgError as exc:
        raise AssemblyError(f"stiffness matrix of {mesh.name} is not positive definite: {exc}") from exc
    c = cho_solve(factor, b)
    norm_b = float(np.linalg.norm(b))
    residual = float(np.linalg.norm(A @ c - b)) / norm_b if norm_b > 0.0 else 0.0
    if residual > RESIDUAL_TOL:
        logger.warning(f"relative residual {residual:.3e} on {mesh.name} exceeds {RESIDUAL_TOL:g}")
    logger.info(f"Solved on {mesh.name}: {len(c)} unknowns, residual {residual:.2e}")
    return Solution(mesh=mesh, coefficients=c, s=s, residual=residual, stiffness=A, load=b)


def a_posteriori_estimate(solution: Solution, f: ScalarField) -> float:
    """(Σ_T h_T^{2s} ‖f‖²_{L²(T)})^{1/2}."""
    mesh = solution.mesh
    lam, w = simplex_rule(mesh.dim, GAUSS_SEPARATED)
    X = mesh.mapped_points(lam)
    values = f(X.reshape(-1, mesh.dim)).reshape(len(X), -1)
    local = mesh.volumes * ((values ** 2) @ w)
    return math.sqrt(float(np.sum(mesh.diameters ** (2.0 * solution.s) * local)))


def l2_distance(coarse: Solution, fine: Solution) -> float:
    """‖u_coarse − u_fine‖_{L²(Ω)}, integrated on the finer mesh."""
    mesh = fine.mesh
    lam, w = simplex_rule(mesh.dim, GAUSS_SEPARATED)
    X = mesh.mapped_points(lam).reshape(-1, mesh.dim)
    diff = (coarse.evaluate(X) - fine.evaluate(X)).reshape(mesh.n_simplices, -1)
    return math.sqrt(float(np.sum(mesh.volumes * ((diff ** 2) @ w))))


# ---------------------------------------------------------------------- analytic data

class RhsGrowthRow(BaseModel):
    order: int
    value: float


class RhsGrowth(BaseModel):
    """Σ_{|β|=j} ‖∂^β f‖_{L²(Ω)} per order j and the fitted analyticity constant."""
    field: str
    rows: List[RhsGrowthRow]
    gamma: float


def analytic_rhs_check(f: ScalarField, region, p_max: int) -> RhsGrowth:
    """
    Derivative growth of the right-hand side and
    γ_f = max_j (value_j / j^j)^{1/(j+1)} (with 0^0 = 1).
    """
    if p_max < 0:
        raise ConfigurationError(f"p_max={p_max} must be non-negative", key="pmax")
    rows, gammas = [], []
    for j in range(p_max + 1):
        value = 0.0
        for beta in MultiIndex.of_order(j):
            value += weighted_norm(f, region, beta=beta).value
        rows.append(RhsGrowthRow(order=j, value=value))
        scale = float(j) ** j if j > 0 else 1.0
        gammas.append((value / scale) ** (1.0 / (j + 1)))
        logger.debug(f"{f.name}: order {j} derivative norm {value:.6g}")
    return RhsGrowth(field=f.name, rows=rows, gamma=max(gammas))


def galerkin_defect(solution: Solution) -> float:
    """max_i |a(u_h, φ_i) − (f, φ_i)|."""
    return float(np.max(np.abs(solution.stiffness @ solution.coefficients - solution.load)))


def energies_under_refinement(meshes: List[Mesh], f: ScalarField, s: float) -> Dict[str, float]:
    """a(u_h, u_h) on a nested sequence of meshes."""
    return {mesh.name: solve(mesh, f, s).energy for mesh in meshes}
