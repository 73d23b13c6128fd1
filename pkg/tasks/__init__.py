"""
Tasks package.
Provides one task per CLI command on a common base, and the orchestrator
that routes a run configuration to its task.
"""

from .base_task import BaseTask, TaskResult
from .partition_task import PartitionTask
from .cover_task import CoverTask
from .norms_task import NormsTask
from .extend_task import ExtendTask
from .solve_task import SolveTask
from .verify_task import VerifyTask
from .growth_task import GrowthTask
from .orchestrator_task import OrchestratorTask

__all__ = [
    'BaseTask',
    'TaskResult',
    'PartitionTask',
    'CoverTask',
    'NormsTask',
    'ExtendTask',
    'SolveTask',
    'VerifyTask',
    'GrowthTask',
    'OrchestratorTask'
]
