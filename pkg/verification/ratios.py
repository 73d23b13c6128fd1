#!/usr/bin/env python
"""
Ratio ladders for the local estimates of the regularity theory.

Each check evaluates LHS and RHS0 (the right-hand side without its
constant) on a ladder of concentric local sets R_k = R_0·2^{-k} and hands
the ratios to the verdict rule. Rungs are independent and draw their
Monte-Carlo samples from streams keyed by the rung index.
"""

import logging
import math
from typing import Callable, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.optimize import minimize_scalar

from config import CYLINDER_HEIGHT, MC_BUDGET, P_MAX, ROOT_SEED, SHELL_ORDER
from errors import ConfigurationError
from geometry.polytope import Polytope
from numerics.fields import CallableField
from numerics.fields import Field as ScalarField
from numerics.quadrature import directional_derivative, integrate_shells, jacobi_rule, slobodeckij, weighted_norm
from numerics.regions import BallRegion, WedgeModelRegion
from report_models import RatioReport, RatioRow
from verification.manufactured import ManufacturedTriple
from verification.norms import (ball_frame, check_direction, check_multi_index, cylinder, data_norm, flux_norm_sq,
                                grad_norm_sq, index_directions, n_squared)
from verification.verdict import FRONTIER_T, make_report, safe_ratio

logger = logging.getLogger(__name__)

LADDER = 5
HIGH_ORDER_LADDER = 3
SHIFT_LADDER = 3
HARDY_LADDER = 3
LOCALIZATION_LADDER = 2
# Radius factor of the set on which N(U, F, f) is measured
ENLARGEMENT = 2.0
TRACE_ORDER = 16
# Finite-difference noise may reach this fraction of the LHS before a rung is distrusted
FD_NOISE_TOL = 1.0


def _ladder(ball: BallRegion, levels: int):
    if levels < 1:
        raise ConfigurationError(f"a ladder needs at least one rung, got {levels}", key="levels")
    return [ball.scaled(2.0 ** -k) for k in range(levels)]


def _check_c(c: float) -> None:
    if not 0.0 < c < 1.0:
        raise ConfigurationError(f"c={c} must lie in (0, 1)", key="c")


def _check_shift(t: float) -> None:
    if not 0.0 <= t < 0.5:
        raise ConfigurationError(f"t={t} must lie in [0, 1/2)", key="t")


def _base_parameters(triple: ManufacturedTriple, ball: BallRegion) -> dict:
    return {"triple": triple.name, "s": triple.s, "shape": ball.shape, "center": ball.center.tolist(),
            "R0": ball.radius}


# ---------------------------------------------------------------------- Caccioppoli

def caccioppoli_ratio(triple: ManufacturedTriple, ball: BallRegion, c: float, theta: float, theta2: float,
                      direction: Sequence[float], levels: int = LADDER) -> RatioReport:
    """
    ‖D_•∇U‖²_{L²_α(B_{cR}×(0,θ))} against
    (((1−c)R)^{−2} + (θ′−θ)^{−2})‖∇U‖²_{L²_α(B_R×(0,θ′))} + ‖D_•f‖²_{L²(B_R)} + ‖F‖²_{L²_{−α}(B_R×(0,θ′))}.

    Args:
        triple: Manufactured (U, F, f)
        ball: The set B_R of a covering element (ball, half-ball or wedge)
        c: Radius factor of the inner set
        theta: Inner height θ
        theta2: Outer height θ′ > θ
        direction: D_• direction, admissible for the shape of the ball
        levels: Rungs of the dyadic ladder

    Raises:
        ConfigurationError: inadmissible direction, c ∉ (0, 1) or θ ≥ θ′
    """
    _check_c(c)
    if not 0.0 < theta < theta2:
        raise ConfigurationError(f"heights must satisfy 0 < θ < θ′, got θ={theta}, θ′={theta2}", key="theta")
    g = check_direction(ball, direction)
    a = triple.alpha
    rows = []
    for B in _ladder(ball, levels):
        R = B.radius
        outer = cylinder(B, theta2, a)
        lhs = grad_norm_sq(triple.U, cylinder(B.scaled(c), theta, a), [g])
        energy = grad_norm_sq(triple.U, outer).squared
        f_term = weighted_norm(triple.f, B, directions=[g]).squared
        F_term = flux_norm_sq(triple.F, outer)
        rhs0 = (((1.0 - c) * R) ** -2 + (theta2 - theta) ** -2) * energy + f_term + F_term
        error = lhs.noise / lhs.squared if lhs.squared > 0.0 else 0.0
        rows.append(RatioRow(scale=R, lhs=lhs.squared, rhs0=rhs0, ratio=safe_ratio(lhs.squared, rhs0), error=error))
    parameters = {**_base_parameters(triple, ball), "c": c, "theta": theta, "theta2": theta2,
                  "direction": g.tolist()}
    return make_report(f"caccioppoli:{triple.name}:{ball.shape}", rows, parameters, error_tol=FD_NOISE_TOL)


def fit_gamma(triple: ManufacturedTriple, ball: BallRegion, p: int, height: Optional[float] = None) -> float:
    """
    γ = max(1, max_{1≤k≤p} (R^k A_k/A_0)^{1/k}/k) with A_k the largest
    ‖∂^η∇U‖_{L²_α(B_R^Y)} over admissible |η| = k.
    """
    if p == 0:
        return 1.0
    cyl = cylinder(ball, triple.Y if height is None else height, triple.alpha)
    A0 = math.sqrt(grad_norm_sq(triple.U, cyl).squared)
    if A0 == 0.0:
        return 1.0
    gamma = 1.0
    for k in range(1, p + 1):
        Ak = max(math.sqrt(grad_norm_sq(triple.U, cyl, dirs).squared) for _, dirs in index_directions(ball, k))
        gamma = max(gamma, (ball.radius ** k * Ak / A0) ** (1.0 / k) / k)
    logger.debug(f"fitted gamma {gamma:.4g} for {triple.name} up to order {p}")
    return gamma


def high_order_caccioppoli(triple: ManufacturedTriple, ball: BallRegion, beta, c: float = 0.5,
                           gamma: Optional[float] = None, levels: int = HIGH_ORDER_LADDER,
                           p_max: int = P_MAX) -> RatioReport:
    """
    ‖∂^β∇U‖²_{L²_α(B_{cR}^Y)} against R^{−2p}(γp)^{2p}(‖∇U‖²_{L²_α(B_R^Y)} + R²Ñ^{(p)}), p = |β|.

    γ is fitted on the largest set when not given.

    Raises:
        ConfigurationError: |β| > p_max or β not admissible for the shape
    """
    _check_c(c)
    beta = check_multi_index(ball, beta)
    p = beta.order
    if p > p_max:
        raise ConfigurationError(f"|β|={p} exceeds p_max={p_max}", key="beta")
    if gamma is None:
        gamma = fit_gamma(triple, ball, p)
    dirs = ball_frame(ball).directions(beta.as_tuple())
    a, Y = triple.alpha, triple.Y
    rows = []
    for B in _ladder(ball, levels):
        R = B.radius
        lhs = grad_norm_sq(triple.U, cylinder(B.scaled(c), Y, a), dirs)
        energy = grad_norm_sq(triple.U, cylinder(B, Y, a)).squared
        bundle = data_norm(triple, B, p, gamma)
        rhs0 = R ** (-2 * p) * (gamma * p) ** (2 * p) * (energy + R ** 2 * bundle.value)
        error = lhs.noise / lhs.squared if lhs.squared > 0.0 else 0.0
        rows.append(RatioRow(scale=R, lhs=lhs.squared, rhs0=rhs0, ratio=safe_ratio(lhs.squared, rhs0), error=error))
    parameters = {**_base_parameters(triple, ball), "beta": list(beta.as_tuple()), "c": c}
    return make_report(f"caccioppoli_p{p}:{triple.name}:{ball.shape}:{beta.label}", rows, parameters,
                       gamma=gamma, error_tol=FD_NOISE_TOL)


# ---------------------------------------------------------------------- shift estimates

def _shift_lhs(triple: ManufacturedTriple, ball: BallRegion, t: float, budget: int, seed: int,
               job: str) -> tuple:
    """∫ y^α ‖∇U(·,y)‖²_{H^t(B)} dy with the Monte-Carlo standard error."""
    a, Y = triple.alpha, triple.Y
    l2 = grad_norm_sq(triple.U, cylinder(ball, Y, a)).squared
    if t == 0.0:
        return l2, 0.0
    rule = jacobi_rule(a, Y, SHELL_ORDER)
    semi, variance = 0.0, 0.0
    for j, (y, w) in enumerate(zip(rule.nodes, rule.weights)):
        for i in range(triple.dim + 1):
            component = CallableField(
                lambda X, y=y, i=i: triple.U.gradient(np.column_stack([X, np.full(len(X), y)]))[:, i],
                triple.dim, name=f"d{i}U(y={y:.3g})")
            estimate = slobodeckij(component, ball, t, budget=budget, seed=seed, job=f"{job}:{j}")
            semi += w * estimate.value
            variance += (w * estimate.stderr) ** 2
    return l2 + semi, math.sqrt(variance)


def shift_ratio(triple: ManufacturedTriple, ball: BallRegion, t: float, beta=None, c: float = 0.5,
                polytope: Optional[Polytope] = None, gamma: Optional[float] = None, levels: int = SHIFT_LADDER,
                budget: int = MC_BUDGET, seed: int = ROOT_SEED) -> RatioReport:
    """
    Shift estimates in the tangential variables.

    Without β: ∫ y^α ‖∇U(·,y)‖²_{H^t(B_R)} dy against N²(U, F, f) on the set
    enlarged by ENLARGEMENT. With β: ‖r_∂Ω^{−t} D^β∇U‖²_{L²_α(B_{cR}^{Y/2})}
    against R^{−2p−1}(γp)^{2p}(1 + γp)(‖∇U‖²_{L²_α(B_R^Y)} + R^{s+1}Ñ^{(p)}).
    Shifts above FRONTIER_T are frontier probes and get no verdict.

    Raises:
        ConfigurationError: t ∉ [0, 1/2), or β given without the polytope
    """
    _check_shift(t)
    _check_c(c)
    frontier = t > FRONTIER_T
    parameters = {**_base_parameters(triple, ball), "t": t}
    rows = []
    if beta is None:
        for k, B in enumerate(_ladder(ball, levels)):
            lhs, lhs_err = _shift_lhs(triple, B, t, budget, seed, job=f"shift:{triple.name}:{k}")
            n2 = n_squared(triple, B.scaled(ENLARGEMENT), budget=budget, seed=seed,
                           job=f"shift-n:{triple.name}:{k}")
            error = math.hypot(lhs_err / lhs if lhs > 0.0 else 0.0, n2.stderr / n2.value if n2.value > 0.0 else 0.0)
            rows.append(RatioRow(scale=B.radius, lhs=lhs, rhs0=n2.value, ratio=safe_ratio(lhs, n2.value),
                                 error=error))
        return make_report(f"shift:{triple.name}:t={t:g}", rows, parameters, frontier=frontier)

    if polytope is None:
        raise ConfigurationError("the localized shift estimate needs the polytope for r_∂Ω", key="polytope")
    beta = check_multi_index(ball, beta)
    p = beta.order
    if gamma is None:
        gamma = fit_gamma(triple, ball, p)
    dirs = ball_frame(ball).directions(beta.as_tuple())
    a, Y, s = triple.alpha, triple.Y, triple.s

    def boundary_weight(X: np.ndarray) -> np.ndarray:
        return polytope.distances(X[:, :-1]).r_bnd ** (-t)

    for B in _ladder(ball, levels):
        R = B.radius
        lhs = grad_norm_sq(triple.U, cylinder(B.scaled(c), 0.5 * Y, a), dirs, weight=boundary_weight)
        energy = grad_norm_sq(triple.U, cylinder(B, Y, a)).squared
        bundle = data_norm(triple, B, p, gamma)
        rhs0 = R ** (-2 * p - 1) * (gamma * p) ** (2 * p) * (1.0 + gamma * p) * (energy + R ** (s + 1.0) * bundle.value)
        error = lhs.noise / lhs.squared if lhs.squared > 0.0 else 0.0
        rows.append(RatioRow(scale=R, lhs=lhs.squared, rhs0=rhs0, ratio=safe_ratio(lhs.squared, rhs0), error=error))
    parameters.update({"beta": list(beta.as_tuple()), "c": c})
    return make_report(f"shift_local:{triple.name}:t={t:g}:{beta.label}", rows, parameters, gamma=gamma,
                       frontier=frontier, error_tol=FD_NOISE_TOL)


# ---------------------------------------------------------------------- trace estimate

def _dy(V: ScalarField, Z: np.ndarray) -> np.ndarray:
    if hasattr(V, "dy"):
        return V.dy(Z)
    return directional_derivative(V, [np.eye(V.dim)[-1]], Z)


def trace_ratio(V: ScalarField, xs, Y: float = CYLINDER_HEIGHT, alpha: Optional[float] = None) -> RatioReport:
    """
    |V(x,0)|² against ‖V‖^{1−α}‖∂_yV‖^{1+α} + ‖V‖², norms in L²_α(0, Y), at each x.

    The constant of the report is the largest ratio.

    Raises:
        ConfigurationError: α unknown, or α ∉ (−1, 1)
    """
    if alpha is None:
        alpha = getattr(V, "alpha", None)
    if alpha is None or not -1.0 < alpha < 1.0:
        raise ConfigurationError(f"trace ratio needs α in (−1, 1), got {alpha}", key="alpha")
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if V.dim == 2 and xs.shape[0] == 1 and xs.shape[1] != 1:
        xs = xs.reshape(-1, 1)
    rule = jacobi_rule(alpha, Y, TRACE_ORDER)
    rows = []
    for i, x in enumerate(xs):
        Z = np.column_stack([np.repeat(x[None, :], len(rule.nodes), axis=0), rule.nodes])
        norm_v = math.sqrt(rule.integrate(V(Z) ** 2))
        norm_dv = math.sqrt(rule.integrate(_dy(V, Z) ** 2))
        lhs = float(V(np.append(x, 0.0)[None, :])[0]) ** 2
        rhs0 = norm_v ** (1.0 - alpha) * norm_dv ** (1.0 + alpha) + norm_v ** 2
        rows.append(RatioRow(scale=float(i), lhs=lhs, rhs0=rhs0, ratio=safe_ratio(lhs, rhs0)))
    parameters = {"field": V.name, "Y": Y, "alpha": alpha, "points": xs.tolist()}
    return make_report(f"trace:{V.name}", rows, parameters, scale_name="x", rule="finite")


# ---------------------------------------------------------------------- localization

class CutoffProfile(BaseModel):
    """Radial profile φ on [0, 1) of a cutoff η(x) = φ(|x − x0|/(cR))."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    slope: Callable[[np.ndarray], np.ndarray]

    @property
    def max_value(self) -> float:
        return float(self.value(np.zeros(1))[0])

    @property
    def max_slope(self) -> float:
        best = minimize_scalar(lambda r: -abs(float(self.slope(np.array([r]))[0])), bounds=(0.0, 1.0),
                               method="bounded", options={"xatol": 1e-10})
        return -float(best.fun)


def _mollifier(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


def _mollifier_slope(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    q = 1.0 - r[inside] ** 2
    out[inside] = -2.0 * r[inside] / q ** 2 * np.exp(1.0 - 1.0 / q)
    return out


STANDARD_MOLLIFIER = CutoffProfile(name="mollifier", value=_mollifier, slope=_mollifier_slope)


def localization_ratio(f: ScalarField, center: Sequence[float], R: float, c: float = 0.5, s: float = 0.5,
                       eta: CutoffProfile = STANDARD_MOLLIFIER, levels: int = LOCALIZATION_LADDER,
                       budget: int = MC_BUDGET, seed: int = ROOT_SEED) -> RatioReport:
    """
    ‖ηf‖_{H^{1−s}} against (R^s‖∇η‖_∞ + (R^{s−1} + 1)‖η‖_∞)‖f‖_{L²(B_R)} + ‖η‖_∞|f|_{H^{1−s}(B_R)}.

    The Slobodeckij part of the left side is taken over B_{2R}; ηf vanishes
    outside B_{cR}.

    Raises:
        ConfigurationError: c ∉ (0, 1) or s ∉ (0, 1)
    """
    _check_c(c)
    if not 0.0 < s < 1.0:
        raise ConfigurationError(f"s={s} must lie in (0, 1)", key="s")
    center = np.asarray(center, dtype=float)
    sigma = 1.0 - s
    eta_max, eta_slope = eta.max_value, eta.max_slope
    rows = []
    for k in range(levels):
        Rk = R * 2.0 ** -k
        radius = c * Rk
        cut = CallableField(lambda X, radius=radius: eta.value(np.linalg.norm(X - center, axis=1) / radius) * f(X),
                            f.dim, name=f"eta*{f.name}")
        l2 = weighted_norm(cut, BallRegion(center, radius)).squared
        semi = slobodeckij(cut, BallRegion(center, 2.0 * Rk), sigma, budget=budget, seed=seed,
                           job=f"localization:{k}:cut")
        lhs = math.sqrt(l2 + max(semi.value, 0.0))
        ball = BallRegion(center, Rk)
        f_l2 = math.sqrt(weighted_norm(f, ball).squared)
        f_semi = slobodeckij(f, ball, sigma, budget=budget, seed=seed, job=f"localization:{k}:f")
        f_seminorm = math.sqrt(max(f_semi.value, 0.0))
        rhs0 = (Rk ** s * eta_slope / radius + (Rk ** (s - 1.0) + 1.0) * eta_max) * f_l2 + eta_max * f_seminorm
        lhs_err = semi.stderr / (2.0 * lhs * lhs) if lhs > 0.0 else 0.0
        rhs_err = eta_max * f_semi.stderr / (2.0 * f_seminorm * rhs0) if f_seminorm > 0.0 else 0.0
        rows.append(RatioRow(scale=Rk, lhs=lhs, rhs0=rhs0, ratio=safe_ratio(lhs, rhs0),
                             error=math.hypot(lhs_err, rhs_err)))
    parameters = {"field": f.name, "center": center.tolist(), "R0": R, "c": c, "s": s, "eta": eta.name}
    return make_report(f"localization:{f.name}", rows, parameters)


# ---------------------------------------------------------------------- Hardy inequality

def hardy_ratio(u: ScalarField, region: WedgeModelRegion, t: float, s: float, levels: int = HARDY_LADDER) -> RatioReport:
    """
    ‖r_f^{−t−s}u‖_{L²(ω̃)} against ‖r_f^{1−t−s}D_{g⊥}u‖_{L²(ω̃)} on the model
    vertex-edge-face wedge, where r_f = x3 and g⊥ = e3. The ladder shrinks μ.
    """
    _check_shift(t)
    if not 0.0 < s < 1.0:
        raise ConfigurationError(f"s={s} must lie in (0, 1)", key="s")
    e3 = np.array([0.0, 0.0, 1.0])
    rows = []
    for k in range(levels):
        W = WedgeModelRegion(region.mu * 2.0 ** -k, region.xi, region.order)
        left = integrate_shells(W, lambda X: (X[:, 2] ** (-t - s) * u(X)) ** 2)
        right = integrate_shells(W, lambda X: (X[:, 2] ** (1.0 - t - s) * directional_derivative(u, [e3], X)) ** 2)
        lhs = math.inf if left.divergent else math.sqrt(max(left.value, 0.0))
        rhs0 = math.inf if right.divergent else math.sqrt(max(right.value, 0.0))
        note = "divergent" if left.divergent or right.divergent else None
        if note:
            logger.warning(f"Hardy ladder for {u.name}: divergent weighted norm at mu={W.mu:g}")
        rows.append(RatioRow(scale=W.mu, lhs=lhs, rhs0=rhs0, ratio=safe_ratio(lhs, rhs0), note=note))
    parameters = {"field": u.name, "mu0": region.mu, "xi": region.xi, "t": t, "s": s}
    return make_report(f"hardy:{u.name}:t={t:g}", rows, parameters, scale_name="mu")
