#!/usr/bin/env python
"""
Test cases for run configurations, configuration files and named fields.
"""

import os
import sys
import tempfile
import unittest

from pydantic import ValidationError

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from config import COVER_C, ROOT_SEED, XI
from errors import ConfigurationError
from field_factory import FIELD_NAMES, FieldFactory
from geometry.shapes import unit_cube
from report_models import RunConfig, RunConfigFactory


class TestRunConfig(unittest.TestCase):

    def test_defaults(self):
        config = RunConfig(task="partition", polytope="cube")
        self.assertEqual(config.xi, XI)
        self.assertEqual(config.c, COVER_C)
        self.assertEqual(config.seed, ROOT_SEED)
        self.assertEqual(config.f, "one")

    def test_ranges(self):
        with self.assertRaises(ValidationError):
            RunConfig(task="partition", polytope="cube", xi=1.5)
        with self.assertRaises(ValidationError):
            RunConfig(task="verify", s=1.0)
        with self.assertRaises(ValidationError):
            RunConfig(task="verify", c=0.6, chat=0.5)

    def test_required_inputs(self):
        with self.assertRaises(ValidationError):
            RunConfig(task="cover")
        with self.assertRaises(ValidationError):
            RunConfig(task="solve")
        RunConfig(task="solve", mesh="interval8")
        RunConfig(task="verify")

    def test_unknown_task_and_field(self):
        with self.assertRaises(ValidationError):
            RunConfig(task="plot")
        with self.assertRaises(ValidationError):
            RunConfig(task="verify", colour="red")


class TestRunConfigFactory(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def _write(self, text):
        path = os.path.join(self.tmp.name, "run.cfg")
        with open(path, "w") as f:
            f.write(text)
        return path

    def test_file_then_flags(self):
        path = self._write("# partition of the cube\npolytope = cube\nxi = 0.15\nseed = 3\n")
        config = RunConfigFactory.create("partition", path, {"seed": 7, "samples": None})
        self.assertEqual(config.polytope, "cube")
        self.assertAlmostEqual(config.xi, 0.15)
        self.assertEqual(config.seed, 7)
        self.assertEqual(config.samples, 100000)

    def test_unknown_key(self):
        path = self._write("polytope = cube\nradius = 2\n")
        with self.assertRaises(ConfigurationError) as ctx:
            RunConfigFactory.create("partition", path)
        self.assertEqual(ctx.exception.key, "radius")

    def test_key_without_value(self):
        path = self._write("polytope =\n")
        with self.assertRaises(ConfigurationError):
            RunConfigFactory.create("partition", path)

    def test_task_mismatch(self):
        path = self._write("task = solve\nmesh = interval8\n")
        with self.assertRaises(ConfigurationError):
            RunConfigFactory.create("verify", path)
        self.assertEqual(RunConfigFactory.create("solve", path).mesh, "interval8")

    def test_empty_file_is_incomplete(self):
        path = self._write("")
        with self.assertRaises(ValidationError):
            RunConfigFactory.create("partition", path)


class TestFieldFactory(unittest.TestCase):

    def test_every_name(self):
        P = unit_cube()
        for name in FIELD_NAMES:
            u = FieldFactory.create_field(name, polytope=P)
            self.assertEqual(u.dim, 3)

    def test_one_dimensional(self):
        u = FieldFactory.create_field("one", dim=1)
        self.assertEqual(float(u([[0.3]])[0]), 1.0)
        self.assertIsNotNone(FieldFactory.create_field("ball", dim=1).support)

    def test_face_field_vanishes_on_its_face(self):
        P = unit_cube()
        u = FieldFactory.create_field("face", polytope=P)
        self.assertEqual(float(u([[0.4, 0.6, 0.0]])[0]), 0.0)
        self.assertGreater(float(u([[0.4, 0.6, 0.2]])[0]), 0.0)

    def test_errors(self):
        with self.assertRaises(ValueError):
            FieldFactory.create_field("wave")
        with self.assertRaises(ConfigurationError):
            FieldFactory.create_field("corner")


if __name__ == "__main__":
    unittest.main()
