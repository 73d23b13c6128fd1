import logging

from geometry.partition import classification_histogram, feature_equivalence_constants
from geometry.shapes import named_polytope
from report_models import RunConfig
from run_logger import RunLogger
from .base_task import BaseTask, TaskResult

logger = logging.getLogger(__name__)


class PartitionTask(BaseTask):
    """
    Classifies uniform interior samples into the neighborhoods of the
    partition and records how many land in each kind of region.
    """
    version: str = "0.1"
    task_name: str = "partition"

    def initialize(self) -> None:
        pass

    def run(self, config: RunConfig, run_logger: RunLogger) -> TaskResult:
        P = named_polytope(config.polytope)
        P.check_xi(config.xi)
        histogram = classification_histogram(P, config.xi, config.samples, config.seed)
        logger.info(f"{P.name}: {histogram.samples} samples, {histogram.uncovered} uncovered, "
                    f"{histogram.feature_mismatches} feature mismatches")

        rows = [[kind, count] for kind, count in histogram.counts.items()]
        rows.append(["uncovered", histogram.uncovered])
        run_logger.write_csv("partition.csv", ["kind", "count"], rows)
        run_logger.write_json("partition.json", histogram)
        constants = feature_equivalence_constants(P, config.xi, min(config.samples, 20000), config.seed)
        run_logger.write_json("equivalence.json", constants)

        complete = histogram.uncovered == 0 and histogram.feature_mismatches == 0
        verdicts = {f"partition:{P.name}": "covered" if complete else "inconclusive"}
        return self.result(verdicts, {"uncovered": histogram.uncovered,
                                      "feature_mismatches": histogram.feature_mismatches,
                                      "max_memberships": histogram.max_memberships})
