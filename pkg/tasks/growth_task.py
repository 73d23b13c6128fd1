import logging

from field_factory import FieldFactory
from geometry.partition import NeighborhoodSpec
from geometry.polytope import Polytope
from geometry.shapes import named_polytope
from report_models import RunConfig
from run_logger import RunLogger
from verification.growth import growth_profile
from .base_task import BaseTask, TaskResult

logger = logging.getLogger(__name__)

DEFAULT_FIELD = "face"


def target_spec(P: Polytope, xi: float, field: str) -> NeighborhoodSpec:
    """
    Neighborhood a named field is singular on: the vertex-edge-face region
    at vertex 0 for "corner", the region of face 0 otherwise.
    """
    if field == "corner":
        e = P.E_v[0][0]
        return NeighborhoodSpec(kind="vef", xi=xi, vertex=0, edge=e, face=P.F_e[e][0])
    return NeighborhoodSpec(kind="f", xi=xi, face=0)


class GrowthTask(BaseTask):
    """
    Table of weighted derivative norms of a field on one neighborhood and the
    fitted growth constant γ.
    """
    version: str = "0.1"
    task_name: str = "growth"

    def initialize(self) -> None:
        pass

    def run(self, config: RunConfig, run_logger: RunLogger) -> TaskResult:
        P = named_polytope(config.polytope)
        P.check_xi(config.xi)
        name = config.u or DEFAULT_FIELD
        u = FieldFactory.create_field(name, s=config.s, polytope=P)
        spec = target_spec(P, config.xi, name)
        report = growth_profile(u, P, spec, config.t, config.s, config.pmax)
        run_logger.write_report(report)
        if report.verdict == "violated":
            logger.warning(f"{report.id}: a weighted norm diverges, so {u.name} is outside the theory at t={config.t}")
        return self.result({report.id: report.verdict}, {"gamma_fit": report.gamma_fit,
                                                         "region": spec.label})
