import csv
import logging
import os
import re
import time
from importlib.metadata import PackageNotFoundError, version
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import orjson
from pydantic import BaseModel

from config import OUTPUT_DIR
from report_models import GrowthReport, ManifestEntry, RatioReport, RunManifest
from utils import sha256_file, utcnow

logger = logging.getLogger(__name__)
_run_logger = None

VERSIONED_PACKAGES = ("numpy", "scipy", "sympy", "shapely", "pydantic")
JSON_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_NON_STR_KEYS | orjson.OPT_INDENT_2


def _cell(value: Any) -> Any:
    """Floats as repr so that identical runs give identical bytes."""
    if isinstance(value, float):
        return repr(value)
    return value


def slug(report_id: str) -> str:
    """File-name-safe form of a report id."""
    return re.sub(r"[^A-Za-z0-9._=-]+", "_", report_id).strip("_")


def package_versions() -> Dict[str, str]:
    versions = {}
    for name in VERSIONED_PACKAGES:
        try:
            versions[name] = version(name)
        except PackageNotFoundError:
            versions[name] = "not installed"
    return versions


class RunLogger:
    """Writes the artifacts of one run and the manifest that lists them."""

    def __init__(self, out_dir: str):
        """
        Initialize the run logger.

        Args:
            out_dir: Directory of the run; created if missing
        """
        self.out_dir = out_dir
        self.begin()

    def begin(self) -> None:
        """Start a new run in the same directory: forget earlier artifacts and restart the clock."""
        self.artifacts: List[str] = []
        self.started_at = utcnow()
        self._clock = time.perf_counter()
        os.makedirs(self.out_dir, exist_ok=True)

    def _path(self, name: str) -> str:
        path = os.path.join(self.out_dir, name)
        if path not in self.artifacts:
            self.artifacts.append(path)
        return path

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        """
        Write an RFC-4180 CSV artifact.

        Args:
            name: File name inside the run directory
            header: Column names
            rows: Data rows

        Returns:
            str: Path of the written file
        """
        path = self._path(name)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, dialect="excel", lineterminator="\r\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
        logger.debug(f"Wrote {path}")
        return path

    def write_json(self, name: str, payload: Union[BaseModel, Dict, List]) -> str:
        """Write a JSON artifact with sorted keys; non-finite floats become null."""
        if isinstance(payload, BaseModel):
            payload = payload.model_dump()
        path = self._path(name)
        with open(path, "wb") as f:
            f.write(orjson.dumps(payload, option=JSON_OPTIONS))
        logger.debug(f"Wrote {path}")
        return path

    def write_jsonl(self, name: str, records: Iterable[Union[BaseModel, Dict]]) -> str:
        """Write one JSON object per line."""
        path = self._path(name)
        with open(path, "wb") as f:
            for record in records:
                if isinstance(record, BaseModel):
                    record = record.model_dump()
                f.write(orjson.dumps(record, option=orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_NON_STR_KEYS))
                f.write(b"\n")
        return path

    def add_file(self, path: str) -> str:
        """Register a file written elsewhere (e.g. by Solution.to_csv)."""
        if path not in self.artifacts:
            self.artifacts.append(path)
        return path

    def write_report(self, report: Union[RatioReport, GrowthReport]) -> List[str]:
        """
        Write a report as JSON, its table as CSV and its (x, y) plot data.

        Returns:
            List[str]: Paths of the three files
        """
        name = slug(report.id)
        if isinstance(report, RatioReport):
            header = ["id", "scale", "lhs", "rhs0", "ratio", "verdict"]
            plot_header = [report.scale_name, "ratio"]
        else:
            header = ["id", "beta", "order", "value", "verdict"]
            plot_header = ["order", "gamma"]
        return [
            self.write_json(f"{name}.json", report),
            self.write_csv(f"{name}.csv", header, report.csv_rows()),
            self.write_csv(f"{name}_plot.csv", plot_header, report.plot_points()),
        ]

    def write_manifest(self, task: str, config: Dict[str, Any], seed: int, status: int,
                       verdicts: Optional[Dict[str, str]] = None) -> str:
        """
        Write manifest.json: inputs, seed, package versions, wall time and a
        content hash for every artifact written so far.
        """
        entries = [ManifestEntry(file=os.path.relpath(p, self.out_dir), sha256=sha256_file(p))
                   for p in self.artifacts if os.path.isfile(p)]
        manifest = RunManifest(task=task, config=config, seed=seed, versions=package_versions(),
                               started_at=self.started_at, wall_time=time.perf_counter() - self._clock,
                               status=status, verdicts=verdicts or {}, artifacts=entries)
        path = os.path.join(self.out_dir, "manifest.json")
        with open(path, "wb") as f:
            f.write(orjson.dumps(manifest.model_dump(), option=JSON_OPTIONS))
        logger.info(f"Manifest with {len(entries)} artifacts written to {path}")
        return path


# Singleton pattern to get or create a run logger instance
def get_run_logger(out_dir: str = OUTPUT_DIR) -> RunLogger:
    global _run_logger
    if _run_logger is None or _run_logger.out_dir != out_dir:
        _run_logger = RunLogger(out_dir)
    return _run_logger
