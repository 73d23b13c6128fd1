import logging

import numpy as np

from field_factory import FieldFactory
from numerics.extension import ExtensionField, dtn_ladder
from report_models import RunConfig
from run_logger import RunLogger
from verification.manufactured import check_triple, extension_triple
from .base_task import BaseTask, TaskResult

logger = logging.getLogger(__name__)

DEFAULT_TRACE = "bump"
PROFILE_HEIGHTS = (0.5, 0.25, 0.1, 0.05, 0.01)


class ExtendTask(BaseTask):
    """
    Extends a compactly supported trace into the half-space, records the
    profile U(x0, y) above the support center and checks the
    Dirichlet-to-Neumann value of (−Δ)^s u against the direct singular integral.
    """
    version: str = "0.1"
    task_name: str = "extend"

    def initialize(self) -> None:
        pass

    def run(self, config: RunConfig, run_logger: RunLogger) -> TaskResult:
        u = FieldFactory.create_field(config.u or DEFAULT_TRACE, s=config.s)
        U = ExtensionField(u, config.s)
        x0 = np.asarray(u.support.center, dtype=float)
        rows = []
        for y in PROFILE_HEIGHTS:
            value, dy, _ = U.moments(x0, y)
            rows.append([y, value, dy, -U.params.d_s * y ** U.alpha * dy])
        run_logger.write_csv("extend_profile.csv", ["y", "U", "dyU", "flux"], rows)

        ladder = dtn_ladder(u, x0, config.s)
        run_logger.write_json("extend_dtn.json", ladder)
        check = check_triple(extension_triple(u, config.s), seed=config.seed)
        run_logger.write_json("extend_check.json", check)
        logger.info(f"{u.name}: (−Δ)^s u(x0) = {ladder.value:.6g}, worst relative disagreement "
                    f"with the direct operator {check.flux_error:.2e}")

        verdicts = {f"extend:{u.name}": "consistent" if check.consistent else "inconclusive"}
        return self.result(verdicts, {"dtn_at_center": ladder.value, "flux_error": check.flux_error})
