from abc import ABC, abstractmethod
from typing import Any, Dict

from pydantic import BaseModel

from report_models import RunConfig
from run_logger import RunLogger

# Verdicts that leave the question open; any of them makes the run exit with status 2
INCONCLUSIVE_VERDICTS = ("inconclusive", "unstable")


class TaskResult(BaseModel):
    """Exit status, per-report verdicts and a short summary of one task run."""
    task: str
    status: int = 0
    verdicts: Dict[str, str] = {}
    summary: Dict[str, Any] = {}


class BaseTask(ABC):
    """
    Abstract base class for all tasks.
    """
    version: str = "0.0.1" # This should be overridden by subclasses.
    task_name: str = "base" # This should be overridden by subclasses.

    @abstractmethod
    def initialize(self) -> None:
        """
        Initialize the task.

        This method is called once before the first run to set up anything
        that does not depend on the run's parameters, like symbolic fixtures
        and caches.
        """
        raise NotImplementedError("Subclasses must implement this method")

    @abstractmethod
    def run(self, config: RunConfig, run_logger: RunLogger) -> TaskResult:
        """
        Run the task and write its artifacts through the run logger.

        This is the core method that each task must implement.
        """
        raise NotImplementedError("Subclasses must implement this method")

    def result(self, verdicts: Dict[str, str], summary: Dict[str, Any]) -> TaskResult:
        """Wrap verdicts and summary; the status is 2 when any verdict is inconclusive."""
        status = 2 if any(v in INCONCLUSIVE_VERDICTS for v in verdicts.values()) else 0
        return TaskResult(task=self.task_name, status=status, verdicts=verdicts, summary=summary)
