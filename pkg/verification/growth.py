#!/usr/bin/env python
"""
Growth of weighted derivative norms with the derivative order.

For a neighborhood ω the table A_β = ‖r_∂Ω^{−t−s} r_v^{β_∥} r_e^{β_⊨} r_f^{β_⊥} D^β u‖_{L²(ω)}
is assembled for |β| ≤ p_max and the growth constant fitted from
γ_k = max_{|β|=k} (A_β/A_0)^{1/k}/k.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence

from errors import ConfigurationError
from geometry.partition import Frame, NeighborhoodSpec, frame_for
from geometry.polytope import Polytope
from numerics.fields import Field as ScalarField
from numerics.quadrature import MultiIndex, WeightSpec, weighted_norm
from numerics.regions import NeighborhoodRegion
from report_models import GrowthReport, GrowthRow

logger = logging.getLogger(__name__)

# Relative change of γ_k between the two highest orders below which the fit is stable
STABILITY_TOL = 0.25


def _gamma_by_order(rows: List[GrowthRow]) -> Dict[int, float]:
    A0 = next(row.value for row in rows if row.order == 0)
    gammas: Dict[int, float] = {}
    for row in rows:
        k = row.order
        if k == 0:
            continue
        g = (row.value / A0) ** (1.0 / k) / k if A0 > 0.0 else math.inf
        gammas[k] = max(gammas.get(k, 0.0), g)
    return gammas


def growth_profile(u: ScalarField, P: Polytope, spec: NeighborhoodSpec, t: float, s: float, p_max: int,
                   frame: Optional[Frame] = None, axes: Sequence[int] = (0, 1, 2)) -> GrowthReport:
    """
    Weighted derivative table of u on one neighborhood and its fitted γ.

    Args:
        u: Field, evaluable on the neighborhood with derivatives up to order p_max
        P: Polytope
        spec: Neighborhood the norms are taken on
        t: Shift; values ≥ 1/2 are allowed to probe the frontier of the theory
        s: Fractional order
        p_max: Highest derivative order, at least 2
        frame: Frame of the neighborhood; frame_for(P, spec) when omitted
        axes: Frame axes (⊥, ⊨, ∥) the multi-indices may use

    Returns:
        GrowthReport; "violated" when any norm diverges, otherwise "stable"
        when γ_{p_max} is within STABILITY_TOL of γ_{p_max−1}

    Raises:
        ConfigurationError: p_max < 2, t < 0, or an axis outside 0..2
    """
    if p_max < 2:
        raise ConfigurationError(f"a growth fit needs p_max ≥ 2, got {p_max}", key="pmax")
    if t < 0.0:
        raise ConfigurationError(f"shift t={t} must be non-negative", key="t")
    if not axes or any(a not in (0, 1, 2) for a in axes):
        raise ConfigurationError(f"axes {list(axes)} must be a non-empty subset of (0, 1, 2)", key="axes")
    frame = frame or frame_for(P, spec)
    region = NeighborhoodRegion(P, spec)
    rows: List[GrowthRow] = []
    for k in range(p_max + 1):
        for beta in MultiIndex.of_order(k, axes):
            weight = WeightSpec.regularity(spec, beta, t, s)
            norm = weighted_norm(u, region, weight, beta, frame)
            rows.append(GrowthRow(beta=beta.as_tuple(), order=k, value=norm.value, divergent=norm.divergent,
                                  shells=norm.shells))
            logger.debug(f"A_{beta.label} of {u.name} on {spec.label}: {norm.value:.6e}")
    report_id = f"growth:{u.name}:{spec.label}:t={t:g}"
    if any(row.divergent for row in rows):
        bad = [MultiIndex.coerce(row.beta).label for row in rows if row.divergent]
        logger.warning(f"{report_id}: divergent weighted norms for β in {bad}")
        return GrowthReport(id=report_id, field=u.name, region=spec.label, t=t, s=s, p_max=p_max, rows=rows,
                            gamma_fit=math.inf, gamma_by_order={}, verdict="violated")
    gammas = _gamma_by_order(rows)
    gamma_fit = max(gammas.values())
    previous, last = gammas[p_max - 1], gammas[p_max]
    stable = abs(last - previous) <= STABILITY_TOL * previous
    verdict = "stable" if stable else "unstable"
    logger.info(f"{report_id}: gamma_fit {gamma_fit:.4g}, verdict {verdict}")
    return GrowthReport(id=report_id, field=u.name, region=spec.label, t=t, s=s, p_max=p_max, rows=rows,
                        gamma_fit=gamma_fit, gamma_by_order=gammas, verdict=verdict)
