import logging
from typing import Optional

from errors import ConfigurationError
from report_models import RunConfig
from run_logger import RunLogger, get_run_logger
from .base_task import BaseTask, TaskResult
from .cover_task import CoverTask
from .extend_task import ExtendTask
from .growth_task import GrowthTask
from .norms_task import NormsTask
from .partition_task import PartitionTask
from .solve_task import SolveTask
from .verify_task import VerifyTask

logger = logging.getLogger(__name__)


class OrchestratorTask(BaseTask):
    """
    The orchestrator task is responsible for routing a validated run
    configuration to the task it names and for writing the run manifest.
    """
    version: str = "0.1"
    task_name: str = "orchestrator"

    def __init__(self):
        super().__init__()
        self.partition_task = None
        self.cover_task = None
        self.norms_task = None
        self.extend_task = None
        self.solve_task = None
        self.verify_task = None
        self.growth_task = None
        self.downstream_tasks = {}

    def initialize(self) -> None:
        """Initialize the orchestrator task with every downstream task"""
        self.partition_task = PartitionTask()
        self.partition_task.initialize()
        self.cover_task = CoverTask()
        self.cover_task.initialize()
        self.norms_task = NormsTask()
        self.norms_task.initialize()
        self.extend_task = ExtendTask()
        self.extend_task.initialize()
        self.solve_task = SolveTask()
        self.solve_task.initialize()
        self.verify_task = VerifyTask()
        self.verify_task.initialize()
        self.growth_task = GrowthTask()
        self.growth_task.initialize()

        self.downstream_tasks = {
            'partition': self.partition_task,
            'cover': self.cover_task,
            'norms': self.norms_task,
            'extend': self.extend_task,
            'solve': self.solve_task,
            'verify': self.verify_task,
            'growth': self.growth_task,
        }

    def run(self, config: RunConfig, run_logger: Optional[RunLogger] = None) -> TaskResult:
        """
        Run the configured task and write manifest.json with its status and verdicts.

        Raises:
            ConfigurationError: no task of that name
        """
        target_task = self.downstream_tasks.get(config.task)
        if target_task is None:
            raise ConfigurationError(f"Unsupported task: {config.task}", key="task")
        run_logger = run_logger or get_run_logger(config.out)
        run_logger.begin()

        logger.info(f"🔄 ROUTING TO: {target_task.task_name.upper()} TASK")
        result = target_task.run(config, run_logger)
        run_logger.write_manifest(config.task, config.model_dump(), config.seed, result.status, result.verdicts)
        logger.info(f"{config.task} finished with status {result.status}")
        return result
