import logging
from typing import List, Optional

import numpy as np

from field_factory import FieldFactory
from geometry.polytope import Polytope
from geometry.shapes import named_polytope
from numerics.fields import SPACE, Y, SymbolicField, space_symbols
from numerics.regions import BallRegion, equivalent_vef_wedge
from report_models import RatioReport, RunConfig
from run_logger import RunLogger
from verification.manufactured import check_triple, polynomial_triple, symbolic_triple
from verification.ratios import (caccioppoli_ratio, hardy_ratio, high_order_caccioppoli, localization_ratio,
                                 shift_ratio, trace_ratio)
from .base_task import BaseTask, TaskResult

logger = logging.getLogger(__name__)

BALL_RADIUS = 0.2
CACCIOPPOLI_C = 0.5
THETA = 0.5
THETA2 = 0.8
WEDGE_MU = 1.0


class VerifyTask(BaseTask):
    """
    Runs the ratio ladders of the local estimates on manufactured triples:
    Caccioppoli (first and high order), shift, trace, localization and Hardy.
    Each ladder becomes one report with its own verdict.
    """
    version: str = "0.1"
    task_name: str = "verify"

    def __init__(self):
        super().__init__()
        self.s = None
        self.profile_triple = None
        self.cubic_triple = None

    def initialize(self) -> None:
        self.s = None

    def _triples(self, s: float) -> None:
        """x1(1 + y²) and (x1²x2 + x3)(1 + y^{2s}); rebuilt only when s changes."""
        if self.s == s:
            return
        x1, x2, x3 = space_symbols(3)
        self.profile_triple = symbolic_triple(x1 * (1 + Y ** 2), s, "x1(1+y^2)")
        cubic = SymbolicField(x1 ** 2 * x2 + x3, space_symbols(3), name="x1^2x2+x3")
        self.cubic_triple = polynomial_triple(cubic, s)
        self.s = s

    @staticmethod
    def _ball(P: Optional[Polytope]) -> BallRegion:
        """Ball at the vertex centroid, shrunk to stay inside the polytope."""
        if P is None:
            return BallRegion(np.zeros(3), BALL_RADIUS)
        center = P.vertices.mean(axis=0)
        inside = float(P.distances(center[None, :]).r_bnd[0])
        return BallRegion(center, min(BALL_RADIUS, 0.5 * inside))

    def run(self, config: RunConfig, run_logger: RunLogger) -> TaskResult:
        self._triples(config.s)
        P = named_polytope(config.polytope) if config.polytope else None
        ball = self._ball(P)
        center = ball.center
        order = min(2, config.pmax)
        beta = (0, order // 2, order - order // 2)

        checks = [check_triple(triple, seed=config.seed) for triple in (self.profile_triple, self.cubic_triple)]
        run_logger.write_jsonl("triples.jsonl", checks)
        for check in checks:
            if not check.consistent:
                logger.warning(f"triple {check.name} is inconsistent: flux error {check.flux_error:.2e}")

        reports: List[RatioReport] = [
            caccioppoli_ratio(self.profile_triple, ball, CACCIOPPOLI_C, THETA, THETA2, [1.0, 0.0, 0.0]),
            high_order_caccioppoli(self.cubic_triple, ball, beta, p_max=config.pmax),
            shift_ratio(self.cubic_triple, ball, config.t, budget=config.budget, seed=config.seed),
            trace_ratio(self.profile_triple.U, [center, center + [0.5 * ball.radius, 0.0, 0.0]],
                        alpha=self.profile_triple.alpha),
            localization_ratio(FieldFactory.create_field(config.f, s=config.s, polytope=P, center=center), center,
                               ball.radius, s=config.s, budget=config.budget, seed=config.seed),
            hardy_ratio(SymbolicField(SPACE[2], SPACE, name="x3"), equivalent_vef_wedge(WEDGE_MU, config.xi),
                        config.t, config.s),
        ]
        if P is not None:
            reports.append(shift_ratio(self.cubic_triple, ball, config.t, beta=beta, polytope=P,
                                       budget=config.budget, seed=config.seed))

        verdicts = {}
        for report in reports:
            run_logger.write_report(report)
            verdicts[report.id] = report.verdict
        if not all(check.consistent for check in checks):
            verdicts["triples"] = "inconclusive"
        run_logger.write_csv("verify.csv", ["id", "verdict", "slope", "constant"],
                             [[r.id, r.verdict, "" if r.slope is None else r.slope, r.constant] for r in reports])
        return self.result(verdicts, {"reports": len(reports),
                                      "bounded": sum(r.verdict == "bounded" for r in reports)})
