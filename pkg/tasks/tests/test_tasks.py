#!/usr/bin/env python
"""
Test cases for the tasks and the orchestrator that routes to them.
"""

import csv
import os
import sys
import tempfile
import unittest
from unittest.mock import MagicMock, patch

import orjson

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from geometry.shapes import reference_tetrahedron, unit_cube
from report_models import RunConfig
from run_logger import RunLogger
from tasks import GrowthTask, OrchestratorTask, PartitionTask, SolveTask, TaskResult
from tasks.base_task import BaseTask
from tasks.cover_task import CoverTask
from tasks.growth_task import target_spec


class TestBaseTask(unittest.TestCase):

    def test_status_from_verdicts(self):
        task = PartitionTask()
        self.assertEqual(task.result({"a": "bounded", "b": "frontier"}, {}).status, 0)
        self.assertEqual(task.result({"a": "bounded", "b": "inconclusive"}, {}).status, 2)
        self.assertEqual(task.result({"g": "unstable"}, {}).status, 2)
        self.assertEqual(task.result({"g": "violated"}, {}).task, "partition")

    def test_abstract(self):
        with self.assertRaises(TypeError):
            BaseTask()


class TestOrchestratorTask(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.orchestrator = OrchestratorTask()
        self.orchestrator.initialize()

    def tearDown(self):
        self.tmp.cleanup()

    def test_every_task_is_routed(self):
        self.assertEqual(set(self.orchestrator.downstream_tasks),
                         {"partition", "cover", "norms", "extend", "solve", "verify", "growth"})
        for name, task in self.orchestrator.downstream_tasks.items():
            self.assertEqual(task.task_name, name)

    @patch.object(GrowthTask, "run")
    def test_routes_and_writes_manifest(self, mock_run):
        mock_run.return_value = TaskResult(task="growth", status=2, verdicts={"growth:u": "unstable"})
        config = RunConfig(task="growth", polytope="cube", out=self.tmp.name)
        result = self.orchestrator.run(config, RunLogger(self.tmp.name))
        mock_run.assert_called_once()
        self.assertEqual(result.status, 2)
        with open(os.path.join(self.tmp.name, "manifest.json"), "rb") as f:
            manifest = orjson.loads(f.read())
        self.assertEqual(manifest["task"], "growth")
        self.assertEqual(manifest["status"], 2)
        self.assertEqual(manifest["config"]["polytope"], "cube")

    def test_unknown_task(self):
        config = RunConfig(task="verify", out=self.tmp.name)
        self.orchestrator.downstream_tasks = {"partition": MagicMock()}
        with self.assertRaises(ValueError):
            self.orchestrator.run(config, RunLogger(self.tmp.name))


class TestPartitionTask(unittest.TestCase):

    def test_histogram_artifacts(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = RunConfig(task="partition", polytope="cube", xi=0.1, samples=4000, out=tmp)
            run_logger = RunLogger(tmp)
            task = PartitionTask()
            task.initialize()
            result = task.run(config, run_logger)
            self.assertEqual(result.status, 0)
            self.assertEqual(result.summary["uncovered"], 0)
            with open(os.path.join(tmp, "partition.csv"), newline="") as f:
                rows = list(csv.reader(f))
            self.assertEqual(rows[0], ["kind", "count"])
            self.assertEqual(rows[-1], ["uncovered", "0"])
            self.assertGreaterEqual(sum(int(r[1]) for r in rows[1:-1]), 4000)
            self.assertEqual(len(run_logger.artifacts), 3)


class TestCoverTask(unittest.TestCase):

    def test_one_region_per_kind(self):
        specs = CoverTask.representatives(unit_cube(), 0.1)
        self.assertEqual(sorted(spec.kind for spec in specs), ["e", "ef", "f", "v", "ve", "vef", "vf"])


class TestSolveTask(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.task = SolveTask()
        self.task.initialize()

    def tearDown(self):
        self.tmp.cleanup()

    def _run(self, mesh):
        config = RunConfig(task="solve", mesh=mesh, s=0.5, f="one", out=self.tmp.name)
        return self.task.run(config, RunLogger(self.tmp.name))

    def test_interval_against_closed_form(self):
        coarse = self._run("interval8").summary["max_nodal_error"]
        fine = self._run("interval32").summary["max_nodal_error"]
        self.assertLess(fine, coarse)
        self.assertLess(fine, 0.5)
        with open(os.path.join(self.tmp.name, "solution.csv"), newline="") as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], ["node", "x1", "value"])
        self.assertEqual(len(rows), 34)
        self.assertEqual(float(rows[1][2]), 0.0)

    def test_stiffness_is_cached(self):
        self._run("interval8")
        self._run("interval8")
        self.assertEqual(len(self.task.stiffness_cache), 1)

    def test_summary(self):
        summary = self._run("interval8").summary
        self.assertGreater(summary["energy"], 0.0)
        self.assertLess(summary["galerkin_defect"], 1e-9)
        self.assertGreater(summary["a_posteriori"], 0.0)

    def test_closed_form_only_on_unit_interval(self):
        config = RunConfig(task="solve", mesh="cube2", s=0.5, f="one", out=self.tmp.name)
        result = self.task.run(config, RunLogger(self.tmp.name))
        self.assertIsNone(result.summary["max_nodal_error"])


class TestGrowthTask(unittest.TestCase):

    def test_target_regions(self):
        P = reference_tetrahedron()
        self.assertEqual(target_spec(P, 0.1, "face").label, "f[f0]")
        corner = target_spec(P, 0.1, "corner")
        self.assertEqual(corner.kind, "vef")
        corner.check_features(P)

    def test_growth_artifacts(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = RunConfig(task="growth", polytope="cube", t=0.25, s=0.5, pmax=2, out=tmp)
            run_logger = RunLogger(tmp)
            result = GrowthTask().run(config, run_logger)
            self.assertEqual(len(result.verdicts), 1)
            self.assertIn(list(result.verdicts.values())[0], ("stable", "unstable"))
            self.assertEqual(len(run_logger.artifacts), 3)


if __name__ == "__main__":
    unittest.main()
