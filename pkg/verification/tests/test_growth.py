#!/usr/bin/env python
"""
Test cases for the growth profile of weighted derivative norms near a face.
"""

import math
import os
import sys
import unittest

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from errors import ConfigurationError
from geometry.partition import NeighborhoodSpec
from geometry.shapes import unit_cube
from numerics.fields import face_power, gaussian
from verification.growth import growth_profile

# D_⊥^k r_f^{1/2} = c_k r_f^{1/2−k}
POWER_COEFFICIENTS = {1: 0.5, 2: -0.25, 3: 0.375, 4: -0.9375}


class TestFaceGrowth(unittest.TestCase):
    """r_f^{1/2}·φ(x1, x2) on the neighborhood of the face z = 0."""

    @classmethod
    def setUpClass(cls):
        cls.P = unit_cube()
        cls.spec = NeighborhoodSpec(kind="f", xi=0.2, face=0)
        smooth = gaussian([0.5, 0.5, 0.0], 0.3, axes=(0, 1))
        cls.u = face_power(0.5, cls.P.inward_normal(0), cls.P.vertices[cls.P.faces[0][0]], smooth)
        cls.report = growth_profile(cls.u, cls.P, cls.spec, 0.45, 0.5, 4, axes=(0,))

    def test_table(self):
        self.assertEqual([row.order for row in self.report.rows], [0, 1, 2, 3, 4])
        self.assertEqual(self.report.rows[2].beta, (2, 0, 0))
        self.assertTrue(all(math.isfinite(row.value) for row in self.report.rows))

    def test_normal_derivative_ratios(self):
        for k, c in POWER_COEFFICIENTS.items():
            expected = abs(c) ** (1.0 / k) / k
            self.assertAlmostEqual(self.report.gamma_by_order[k] / expected, 1.0, places=8)

    def test_stable_fit(self):
        self.assertEqual(self.report.verdict, "stable")
        self.assertAlmostEqual(self.report.gamma_fit, 0.5, places=8)
        self.assertEqual(len(self.report.plot_points()), 4)
        self.assertEqual(self.report.csv_rows()[1][1], "100")

    def test_beyond_half_is_violated(self):
        report = growth_profile(self.u, self.P, self.spec, 0.55, 0.5, 2, axes=(0,))
        self.assertEqual(report.verdict, "violated")
        self.assertTrue(report.rows[0].divergent)
        self.assertEqual(report.gamma_fit, math.inf)

    def test_invalid_parameters(self):
        with self.assertRaises(ConfigurationError):
            growth_profile(self.u, self.P, self.spec, 0.25, 0.5, 1)
        with self.assertRaises(ConfigurationError):
            growth_profile(self.u, self.P, self.spec, 0.25, 0.5, 3, axes=(3,))
        with self.assertRaises(ConfigurationError):
            growth_profile(self.u, self.P, self.spec, -0.1, 0.5, 3)


if __name__ == "__main__":
    unittest.main()
