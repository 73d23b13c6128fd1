import logging
import os
from typing import Dict, List

from geometry.covering import certify_overlap, cover, export_covering
from geometry.partition import NeighborhoodSpec, all_specs
from geometry.polytope import Polytope
from geometry.shapes import named_polytope
from report_models import RunConfig
from run_logger import RunLogger, slug
from .base_task import BaseTask, TaskResult

logger = logging.getLogger(__name__)


class CoverTask(BaseTask):
    """
    Builds the dyadic covering of one region of every kind, certifies its
    finite overlap on Monte-Carlo samples and exports the elements.
    """
    version: str = "0.1"
    task_name: str = "cover"

    def initialize(self) -> None:
        pass

    @staticmethod
    def representatives(P: Polytope, xi: float) -> List[NeighborhoodSpec]:
        """The first region of each kind except the interior."""
        chosen: Dict[str, NeighborhoodSpec] = {}
        for spec in all_specs(P, xi):
            if spec.kind != "int" and spec.kind not in chosen:
                chosen[spec.kind] = spec
        return list(chosen.values())

    def run(self, config: RunConfig, run_logger: RunLogger) -> TaskResult:
        P = named_polytope(config.polytope)
        P.check_xi(config.xi)
        rows, verdicts = [], {}
        worst_overlap = 0
        for spec in self.representatives(P, config.xi):
            cov = cover(P, spec, config.c, config.chat, config.depth, config.seed)
            certificate = certify_overlap(cov, config.samples, config.seed)
            name = slug(f"cover_{spec.label}")
            path = os.path.join(run_logger.out_dir, f"{name}.jsonl")
            export_covering(cov, path)
            run_logger.add_file(path)
            run_logger.write_json(f"{name}_certificate.json", certificate)

            rows.append([spec.label, len(cov), certificate.instances, certificate.n_emp, certificate.coverage, certificate.uncovered,
                         certificate.invalid_elements, certificate.excluded_radius])
            ok = certificate.uncovered == 0 and certificate.invalid_elements == 0
            verdicts[f"cover:{spec.label}"] = "covered" if ok else "inconclusive"
            worst_overlap = max(worst_overlap, certificate.n_emp)
            logger.info(f"{spec.label}: {len(cov)} elements ({certificate.instances} with translates), N_emp={certificate.n_emp}, "
                        f"coverage {certificate.coverage:.4f}")

        run_logger.write_csv("cover.csv", ["region", "elements", "instances", "n_emp", "coverage", "uncovered", "invalid",
                                           "excluded_radius"], rows)
        return self.result(verdicts, {"regions": len(rows), "n_emp": worst_overlap})
