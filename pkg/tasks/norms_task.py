import logging

from field_factory import FieldFactory
from geometry.shapes import named_polytope
from numerics.quadrature import MultiIndex
from numerics.regions import global_weighted_norm
from report_models import RunConfig
from run_logger import RunLogger
from .base_task import BaseTask, TaskResult

logger = logging.getLogger(__name__)

DEFAULT_FIELD = "face"


class NormsTask(BaseTask):
    """
    Weighted norms of D^β u over the whole partition, each region in its own
    frame, for every multi-index up to order pmax.
    """
    version: str = "0.1"
    task_name: str = "norms"

    def initialize(self) -> None:
        pass

    def run(self, config: RunConfig, run_logger: RunLogger) -> TaskResult:
        P = named_polytope(config.polytope)
        u = FieldFactory.create_field(config.u or DEFAULT_FIELD, s=config.s, polytope=P)
        rows, totals = [], []
        divergent = 0
        for k in range(config.pmax + 1):
            for beta in MultiIndex.of_order(k):
                result = global_weighted_norm(u, P, config.xi, config.t, config.s, beta)
                for region, value in result.regions.items():
                    rows.append([beta.label, region, value])
                totals.append([beta.label, k, result.value, result.divergent])
                divergent += int(result.divergent)
                logger.info(f"{u.name}: |D^{beta.label} u| = {result.value:.6g} over {len(result.regions)} regions")

        run_logger.write_csv("norms.csv", ["beta", "region", "value"], rows)
        run_logger.write_csv("norms_total.csv", ["beta", "order", "value", "divergent"], totals)
        if divergent:
            logger.warning(f"{divergent} of {len(totals)} weighted norms of {u.name} diverge at t={config.t}")
        return self.result({}, {"field": u.name, "indices": len(totals), "divergent": divergent})
