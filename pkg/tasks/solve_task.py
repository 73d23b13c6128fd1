import logging
import os
from typing import Dict, Optional

import numpy as np

from field_factory import FieldFactory
from numerics.extension import ball_closed_form
from numerics.fracsolve import Solution, StiffnessMatrix, a_posteriori_estimate, assemble, galerkin_defect, solve
from numerics.mesh import Mesh, named_mesh
from report_models import RunConfig
from run_logger import RunLogger
from .base_task import BaseTask, TaskResult

logger = logging.getLogger(__name__)


def _is_unit_interval(mesh: Mesh) -> bool:
    return mesh.dim == 1 and np.isclose(mesh.nodes.min(), -1.0) and np.isclose(mesh.nodes.max(), 1.0)


def closed_form_error(solution: Solution) -> Optional[float]:
    """
    Largest nodal deviation from the unit-ball solution of (−Δ)^s u = 1, or
    None when the mesh is not the unit interval.
    """
    if not _is_unit_interval(solution.mesh):
        return None
    exact = ball_closed_form(1, solution.s, solution.mesh.nodes)
    return float(np.max(np.abs(solution.nodal_values - exact)))


class SolveTask(BaseTask):
    """
    Galerkin solve of (−Δ)^s u = f on a mesh, with the error against the
    closed form when f ≡ 1 on the unit interval.
    """
    version: str = "0.1"
    task_name: str = "solve"

    def __init__(self):
        super().__init__()
        self.stiffness_cache: Dict[tuple, StiffnessMatrix] = {}

    def initialize(self) -> None:
        self.stiffness_cache = {}

    def _stiffness(self, mesh: Mesh, s: float, progress: bool) -> StiffnessMatrix:
        key = (mesh.name, mesh.n_nodes, s)
        if key not in self.stiffness_cache:
            self.stiffness_cache[key] = assemble(mesh, s, progress=progress)
        else:
            logger.debug(f"Reusing stiffness matrix of {mesh.name} for s={s}")
        return self.stiffness_cache[key]

    def run(self, config: RunConfig, run_logger: RunLogger) -> TaskResult:
        mesh = named_mesh(config.mesh)
        f = FieldFactory.create_field(config.f, dim=mesh.dim, s=config.s)
        solution = solve(mesh, f, config.s, self._stiffness(mesh, config.s, config.progress), config.progress)
        run_logger.add_file(solution.to_csv(os.path.join(run_logger.out_dir, "solution.csv")))

        summary = {
            "mesh": mesh.name,
            "nodes": mesh.n_nodes,
            "unknowns": int(len(solution.coefficients)),
            "h": mesh.h,
            "s": config.s,
            "f": f.name,
            "energy": solution.energy,
            "residual": solution.residual,
            "galerkin_defect": galerkin_defect(solution),
            "a_posteriori": a_posteriori_estimate(solution, f),
        }
        if config.f == "one":
            summary["max_nodal_error"] = closed_form_error(solution)
        if summary.get("max_nodal_error") is not None:
            logger.info(f"{mesh.name}: max nodal error against the closed form {summary['max_nodal_error']:.3e}")
        run_logger.write_json("solve_summary.json", summary)
        return self.result({}, summary)
