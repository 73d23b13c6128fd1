#!/usr/bin/env python
"""
Command-line front end: `python cli.py run <task> [--config FILE] [flags]`.

Exit status 0 on success, 2 when a verdict is inconclusive and 1 on any
configuration or numerical error.
"""

import logging
from typing import Any, Dict, Optional

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from config import LOG_LEVEL
from errors import RegularityError
from report_models import RunConfig, RunConfigFactory
from run_logger import get_run_logger
from tasks import OrchestratorTask, TaskResult

# Setup logging
logging.basicConfig(level=LOG_LEVEL,
                    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

app = typer.Typer(help="Partitions, coverings, weighted norms, solves and ratio checks on 3D polytopes.",
                  no_args_is_help=True, add_completion=False)
console = Console()

# Global orchestrator task to avoid re-initialization costs
_orchestrator = None


def get_orchestrator() -> OrchestratorTask:
    """Singleton pattern to get or create the orchestrator task"""
    global _orchestrator
    if not _orchestrator:
        logger.info("Initializing orchestrator task")
        _orchestrator = OrchestratorTask()
        _orchestrator.initialize()
    return _orchestrator


def _print_result(result: TaskResult) -> None:
    table = Table(title=f"{result.task} (status {result.status})")
    table.add_column("report")
    table.add_column("verdict")
    for report_id, verdict in result.verdicts.items():
        table.add_row(report_id, verdict)
    for key, value in result.summary.items():
        table.add_row(key, str(value))
    console.print(table)


def execute(task: str, config_path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> int:
    """
    Validate the configuration, run the task and return the exit status.

    A run that fails after validation still gets a manifest with status 1.
    """
    try:
        run_config: RunConfig = RunConfigFactory.create(task, config_path, overrides)
    except (RegularityError, ValidationError, ValueError) as e:
        key = getattr(e, "key", None)
        logger.error(f"Invalid configuration{f' (key {key})' if key else ''}: {str(e)}", exc_info=True)
        return 1

    try:
        result = get_orchestrator().run(run_config)
    except (RegularityError, ValidationError, ValueError) as e:
        logger.error(f"Task {task} failed: {str(e)}", exc_info=True)
        get_run_logger(run_config.out).write_manifest(task, run_config.model_dump(), run_config.seed, 1)
        return 1

    _print_result(result)
    return result.status


@app.command()
def run(
    task: str = typer.Argument(..., help="partition, cover, norms, extend, solve, verify or growth"),
    config: Optional[str] = typer.Option(None, "--config", help="key = value file; flags override it"),
    polytope: Optional[str] = typer.Option(None, help="cube, tetrahedron, lprism or a polytope JSON file"),
    mesh: Optional[str] = typer.Option(None, help="interval<n>, cube<n> or a mesh file"),
    xi: Optional[float] = typer.Option(None, help="partition parameter ξ"),
    c: Optional[float] = typer.Option(None, help="covering element scale"),
    chat: Optional[float] = typer.Option(None, help="covering enlargement scale"),
    s: Optional[float] = typer.Option(None, help="fractional order"),
    t: Optional[float] = typer.Option(None, help="shift of the weighted norms"),
    pmax: Optional[int] = typer.Option(None, help="highest derivative order"),
    depth: Optional[int] = typer.Option(None, help="covering generations"),
    budget: Optional[int] = typer.Option(None, help="Monte-Carlo pairs per Slobodeckij estimate"),
    samples: Optional[int] = typer.Option(None, help="Monte-Carlo samples for partitions and coverings"),
    seed: Optional[int] = typer.Option(None, help="root seed"),
    f: Optional[str] = typer.Option(None, help="right-hand side or localized field"),
    u: Optional[str] = typer.Option(None, help="field for norms, extend and growth"),
    out: Optional[str] = typer.Option(None, help="output directory"),
    progress: bool = typer.Option(False, "--progress", help="show progress bars"),
) -> None:
    """Run one task and write its artifacts and manifest.json."""
    overrides = {"polytope": polytope, "mesh": mesh, "xi": xi, "c": c, "chat": chat, "s": s, "t": t,
                 "pmax": pmax, "depth": depth, "budget": budget, "samples": samples, "seed": seed,
                 "f": f, "u": u, "out": out, "progress": progress or None}
    raise typer.Exit(code=execute(task, config, overrides))


@app.callback()
def main() -> None:
    """Weighted analytic regularity toolkit."""


if __name__ == "__main__":
    app()
