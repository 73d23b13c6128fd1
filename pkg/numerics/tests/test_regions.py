#!/usr/bin/env python
"""
Test cases for integration regions.
"""

import math
import os
import sys
import unittest

import numpy as np

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from errors import ConfigurationError
from geometry.partition import NeighborhoodSpec
from geometry.shapes import unit_cube
from numerics.quadrature import integrate_shells
from numerics.regions import (BallRegion, BoxRegion, CylinderRegion, NeighborhoodRegion, PolytopeRegion,
                              WedgeModelRegion, equivalent_vef_wedge, global_weighted_norm)
from numerics.fields import polynomial_bump
from utils import make_rng


def ones(X):
    return np.ones(len(X))


class TestBallRegions(unittest.TestCase):
    """Balls, half-balls and wedges integrate their own volume."""

    def test_volumes(self):
        ball = BallRegion([0.1, 0.2, 0.3], 0.5)
        half = BallRegion([0.0, 0.0, 0.0], 0.5, "half_ball")
        wedge = BallRegion([0.0, 0.0, 0.0], 0.5, "wedge", opening=math.pi / 2)
        for region, exact in ((ball, 4.0 * math.pi / 3.0 * 0.125), (half, 2.0 * math.pi / 3.0 * 0.125),
                              (wedge, math.pi / 6.0 * 0.125)):
            self.assertAlmostEqual(integrate_shells(region, ones).value, exact, places=10)
            self.assertAlmostEqual(region.volume, exact, places=12)

    def test_singular_ball_converges(self):
        region = BallRegion([0.0, 0.0, 0.0], 1.0, singular=True)
        result = integrate_shells(region, ones)
        self.assertAlmostEqual(result.value, 4.0 * math.pi / 3.0, delta=1e-6)

    def test_membership_and_sampling(self):
        wedge = BallRegion([0.0, 0.0, 0.0], 1.0, "wedge", opening=math.pi / 3)
        X = wedge.sample(500, make_rng(0, "wedge"))
        self.assertTrue(np.all(wedge.contains(X)))
        self.assertFalse(wedge.contains(np.array([[-0.5, 0.0, 0.0]]))[0])

    def test_one_dimensional_ball(self):
        region = BallRegion([0.0], 2.0)
        self.assertAlmostEqual(integrate_shells(region, ones).value, 4.0, places=12)

    def test_invalid_shapes(self):
        with self.assertRaises(ConfigurationError):
            BallRegion([0.0, 0.0, 0.0], 1.0, "wedge")
        with self.assertRaises(ConfigurationError):
            BallRegion([0.0], 1.0, "half_ball")
        with self.assertRaises(ConfigurationError):
            BallRegion([0.0, 0.0, 0.0], -1.0)


class TestCylinders(unittest.TestCase):
    """Base × (0, Y) with the weight y^α."""

    def test_weighted_volume(self):
        base = BoxRegion([0.0], [2.0])
        for alpha in (-0.5, 0.0, 0.5):
            cyl = CylinderRegion(base, 3.0, alpha)
            exact = 2.0 * 3.0 ** (alpha + 1.0) / (alpha + 1.0)
            self.assertAlmostEqual(integrate_shells(cyl, ones).value / exact, 1.0, places=10)
            self.assertAlmostEqual(cyl.volume / exact, 1.0, places=12)

    def test_singular_height(self):
        cyl = CylinderRegion(BoxRegion([0.0], [1.0]), 1.0, alpha=0.0, singular_y=True)
        # ∫ y^{-1/2} dy over (0, 1)
        result = integrate_shells(cyl, lambda X: X[:, -1] ** -0.5)
        self.assertAlmostEqual(result.value, 2.0, delta=5e-3)

    def test_rebuilt_weights(self):
        cyl = CylinderRegion(BoxRegion([0.0], [1.0]), 1.0, alpha=0.2)
        self.assertAlmostEqual(cyl.with_weight(-0.2).alpha, -0.2)
        self.assertAlmostEqual(cyl.with_height(2.0).Y, 2.0)

    def test_invalid(self):
        with self.assertRaises(ConfigurationError):
            CylinderRegion(BoxRegion([0.0], [1.0]), 0.0)
        with self.assertRaises(ConfigurationError):
            CylinderRegion(BoxRegion([0.0], [1.0]), 1.0, alpha=-1.0)
        with self.assertRaises(ConfigurationError):
            CylinderRegion(BallRegion([0.0, 0.0, 0.0], 1.0, singular=True), 1.0, singular_y=True)


class TestPolytopeRegions(unittest.TestCase):
    """Whole-polytope and neighborhood regions."""

    @classmethod
    def setUpClass(cls):
        cls.P = unit_cube()

    def test_cube_volume(self):
        self.assertAlmostEqual(PolytopeRegion(self.P).volume, 1.0, places=10)

    def test_vertex_region_volume(self):
        # the corner region is the ball octant minus its edge and face layers
        spec = NeighborhoodSpec(kind="v", xi=0.2, vertex=0)
        region = NeighborhoodRegion(self.P, spec)
        volume = region.volume
        self.assertGreater(volume, 0.0)
        self.assertLess(volume, math.pi / 6.0 * spec.outer_radius(self.P) ** 3)

    def test_points_belong_to_region(self):
        spec = NeighborhoodSpec(kind="ef", xi=0.2, edge=0, face=self.P.F_e[0][0])
        region = NeighborhoodRegion(self.P, spec)
        X, W = region.shell(2)
        self.assertGreater(len(X), 0)
        self.assertTrue(np.all(region.contains(X)))
        self.assertTrue(np.all(W > 0.0))

    def test_global_norm_of_interior_bump(self):
        result = global_weighted_norm(polynomial_bump([0.5, 0.5, 0.5], 0.3), self.P, 0.2, 0.0, 0.5, (0, 0, 0))
        self.assertFalse(result.divergent)
        self.assertEqual(len(result.regions), 8 + 8 * 3 + 8 * 3 * 2 + 8 * 3 + 12 + 12 * 2 + 6 + 1)


class TestModelWedge(unittest.TestCase):
    """The model vertex-edge-face neighborhood."""

    def test_volume(self):
        region = WedgeModelRegion(0.5, 0.3)
        self.assertAlmostEqual(integrate_shells(region, ones).value / region.volume, 1.0, delta=1e-3)

    def test_sampling(self):
        region = equivalent_vef_wedge(1.0, 0.25)
        X = region.sample(200, make_rng(1, "vef"))
        self.assertTrue(np.all(region.contains(X)))

    def test_invalid(self):
        with self.assertRaises(ConfigurationError):
            WedgeModelRegion(1.0, 1.5)


if __name__ == "__main__":
    unittest.main()
