#!/usr/bin/env python
"""
Verdict rules for ratio ladders.

A ratio LHS/RHS0 with an unspecified constant is judged by its trend over a
dyadic ladder of scales: the slope m of log(ratio) against log(scale). The
scales shrink along the ladder, so m < 0 means the ratio grows as the scale
goes to zero. The ladder is bounded when m ≥ −SLOPE_TOL.
"""

import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from report_models import RatioReport, RatioRow, RatioVerdict

logger = logging.getLogger(__name__)

SLOPE_TOL = 0.2
# Relative Monte-Carlo error above which a rung is not trusted
MC_REL_TOL = 0.25
# Shifts above this are frontier probes and get no verdict
FRONTIER_T = 0.45


def loglog_slope(scales: Sequence[float], ratios: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log(ratio) against log(scale) over the positive finite rungs."""
    pairs = [(x, r) for x, r in zip(scales, ratios) if x > 0.0 and r > 0.0 and math.isfinite(r)]
    if len({x for x, _ in pairs}) < 2:
        return None
    x = np.log([p[0] for p in pairs])
    y = np.log([p[1] for p in pairs])
    return float(np.polyfit(x, y, 1)[0])


def ratio_verdict(scales: Sequence[float], ratios: Sequence[float], errors: Optional[Sequence[float]] = None,
                  error_tol: float = MC_REL_TOL) -> Tuple[RatioVerdict, Optional[float]]:
    """
    Verdict and slope of a ladder.

    Non-finite ratios are unbounded, rungs with a relative error above
    error_tol make the ladder inconclusive, an all-zero ladder is bounded, and fewer than two
    positive rungs are inconclusive.

    Otherwise the ladder is bounded when its log-log slope m satisfies
    m ≥ −SLOPE_TOL. The test is one-sided: a ratio that decays as R → 0
    (m > SLOPE_TOL) is bounded too, not only slopes within ±SLOPE_TOL of 0.
    Only growth toward the feature faster than R^-SLOPE_TOL is unbounded.
    """
    if any(not math.isfinite(r) for r in ratios):
        return "unbounded", None
    if errors is not None and any(e > error_tol for e in errors):
        return "inconclusive", None
    if all(r == 0.0 for r in ratios):
        return "bounded", 0.0
    slope = loglog_slope(scales, ratios)
    if slope is None:
        return "inconclusive", None
    return ("bounded" if slope >= -SLOPE_TOL else "unbounded"), slope


def finite_verdict(ratios: Sequence[float]) -> RatioVerdict:
    """Verdict for pointwise constants: bounded when every ratio is finite."""
    return "bounded" if all(math.isfinite(r) for r in ratios) else "unbounded"


def safe_ratio(lhs: float, rhs0: float) -> float:
    if lhs == 0.0:
        return 0.0
    if rhs0 == 0.0 or not math.isfinite(lhs):
        return math.inf
    return lhs / rhs0


def make_report(report_id: str, rows: List[RatioRow], parameters: Dict[str, Any], scale_name: str = "R",
                rule: str = "slope", gamma: Optional[float] = None, frontier: bool = False,
                error_tol: float = MC_REL_TOL) -> RatioReport:
    """Assemble a report and apply the verdict rule ("slope" or "finite")."""
    ratios = [row.ratio for row in rows]
    if rule == "finite":
        verdict, slope = finite_verdict(ratios), None
    else:
        verdict, slope = ratio_verdict([row.scale for row in rows], ratios, [row.error for row in rows], error_tol)
    if frontier and verdict != "unbounded":
        verdict = "frontier"
    finite = [r for r in ratios if math.isfinite(r)]
    constant = max(finite) if len(finite) == len(ratios) and finite else math.inf
    slope_text = "n/a" if slope is None else f"{slope:.3f}"
    logger.info(f"{report_id}: verdict {verdict} (slope {slope_text}, max ratio {constant:.4g})")
    return RatioReport(id=report_id, scale_name=scale_name, rows=rows, verdict=verdict, slope=slope,
                       constant=constant, gamma=gamma, parameters=parameters)
