import math
from datetime import datetime
from typing import Any, Dict, List, Literal, Optional, Tuple

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import COVER_C, COVER_CHAT, COVER_DEPTH, MC_BUDGET, OUTPUT_DIR, P_MAX, ROOT_SEED, XI
from errors import ConfigurationError

TaskName = Literal["partition", "cover", "norms", "extend", "solve", "verify", "growth"]
RatioVerdict = Literal["bounded", "unbounded", "inconclusive", "frontier"]
GrowthVerdict = Literal["stable", "unstable", "violated"]


class RatioRow(BaseModel):
    """One rung of a ratio ladder."""
    scale: float
    lhs: float
    rhs0: float
    ratio: float
    error: float = 0.0
    note: Optional[str] = None


class RatioReport(BaseModel):
    """LHS / RHS-without-constant over a ladder of scales, with its verdict."""
    id: str
    scale_name: str = "R"
    rows: List[RatioRow]
    verdict: RatioVerdict
    slope: Optional[float] = None
    constant: float = 0.0
    gamma: Optional[float] = None
    parameters: Dict[str, Any] = {}

    @property
    def ratios(self) -> List[float]:
        return [row.ratio for row in self.rows]

    def csv_rows(self) -> List[List[Any]]:
        """Rows of the (id, scale, lhs, rhs0, ratio, verdict) table."""
        return [[self.id, row.scale, row.lhs, row.rhs0, row.ratio, self.verdict] for row in self.rows]

    def plot_points(self) -> List[Tuple[float, float]]:
        return [(row.scale, row.ratio) for row in self.rows if math.isfinite(row.ratio)]


class GrowthRow(BaseModel):
    """A_β for one multi-index."""
    beta: Tuple[int, int, int]
    order: int
    value: float
    divergent: bool = False
    shells: int = 0


class GrowthReport(BaseModel):
    """Table of weighted derivative norms and the fitted growth constant."""
    id: str
    field: str
    region: str
    t: float
    s: float
    p_max: int
    rows: List[GrowthRow]
    gamma_fit: float
    gamma_by_order: Dict[int, float]
    verdict: GrowthVerdict

    def csv_rows(self) -> List[List[Any]]:
        return [[self.id, "".join(str(b) for b in row.beta), row.order, row.value, self.verdict] for row in self.rows]

    def plot_points(self) -> List[Tuple[float, float]]:
        return [(float(k), g) for k, g in sorted(self.gamma_by_order.items())]


class RunConfig(BaseModel):
    """Validated parameters of one CLI run."""
    model_config = ConfigDict(extra="forbid")

    task: TaskName
    polytope: Optional[str] = None
    mesh: Optional[str] = None
    xi: float = Field(default=XI, gt=0.0, lt=1.0)
    c: float = Field(default=COVER_C, gt=0.0, lt=1.0)
    chat: float = Field(default=COVER_CHAT, gt=0.0, lt=1.0)
    s: float = Field(default=0.5, gt=0.0, lt=1.0)
    t: float = Field(default=0.25, ge=0.0, lt=1.0)
    pmax: int = Field(default=P_MAX, ge=0, le=8)
    depth: int = Field(default=COVER_DEPTH, ge=0, le=12)
    budget: int = Field(default=MC_BUDGET, ge=2)
    samples: int = Field(default=100000, ge=1)
    seed: int = Field(default=ROOT_SEED, ge=0)
    f: str = "one"
    u: Optional[str] = None
    out: str = OUTPUT_DIR
    progress: bool = False

    @model_validator(mode="after")
    def _check_scales(self) -> "RunConfig":
        if not self.c < self.chat:
            raise ValueError(f"covering scales must satisfy c < chat, got c={self.c}, chat={self.chat}")
        if self.task in ("partition", "cover", "norms", "growth") and self.polytope is None:
            raise ValueError(f"task '{self.task}' needs a polytope")
        if self.task == "solve" and self.mesh is None:
            raise ValueError("task 'solve' needs a mesh")
        return self


class RunConfigFactory:
    """Factory class for creating RunConfig objects from files and flags."""

    @staticmethod
    def from_file(path: str) -> Dict[str, str]:
        """
        Read `key = value` lines; `#` starts a comment.

        Raises:
            ConfigurationError: unknown key, or a key without a value
        """
        values = dotenv_values(path)
        known = set(RunConfig.model_fields)
        for key, value in values.items():
            if key not in known:
                raise ConfigurationError(f"unknown configuration key '{key}' in {path}", key=key)
            if value is None or value == "":
                raise ConfigurationError(f"configuration key '{key}' in {path} has no value", key=key)
        return dict(values)

    @staticmethod
    def create(task: str, path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
        """File values first, then every flag that was given."""
        values: Dict[str, Any] = RunConfigFactory.from_file(path) if path else {}
        file_task = values.pop("task", None)
        if file_task is not None and file_task != task:
            raise ConfigurationError(f"config file is for task '{file_task}', not '{task}'", key="task")
        for key, value in (overrides or {}).items():
            if value is not None:
                values[key] = value
        return RunConfig(task=task, **values)


class ManifestEntry(BaseModel):
    """One artifact file and its content hash."""
    file: str
    sha256: str


class RunManifest(BaseModel):
    """Inputs, seeds, versions, wall time and artifacts of a run."""
    task: str
    config: Dict[str, Any]
    seed: int
    versions: Dict[str, str]
    started_at: datetime
    wall_time: float
    status: int
    verdicts: Dict[str, str] = {}
    artifacts: List[ManifestEntry] = []
