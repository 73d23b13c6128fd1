#!/usr/bin/env python
"""
Test cases for the Jacobi rule, directional derivatives, shell sums,
weighted norms and the Slobodeckij estimator.
"""

import math
import os
import sys
import unittest

import numpy as np
import sympy as sp

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from errors import ConfigurationError
from geometry.partition import NeighborhoodSpec, frame_for
from geometry.shapes import unit_cube
from numerics.fields import SPACE, X1, X2, X3, CallableField, SymbolicField, face_power, gaussian
from numerics.quadrature import (MultiIndex, WeightSpec, composite_gauss, directional_derivative, graded_breaks,
                                 jacobi_rule, slobodeckij, weighted_norm)
from numerics.regions import BallRegion, BoxRegion, NeighborhoodRegion


class TestJacobiRule(unittest.TestCase):
    """Gauss–Jacobi rule for y^α on (0, Y)."""

    def test_exact_for_polynomials(self):
        for alpha in (-0.5, 0.0, 0.4):
            rule = jacobi_rule(alpha, 2.0, 5)
            for k in range(10):
                exact = 2.0 ** (alpha + k + 1.0) / (alpha + k + 1.0)
                self.assertAlmostEqual(rule.integrate(rule.nodes ** k) / exact, 1.0, places=12)

    def test_invalid_parameters(self):
        with self.assertRaises(ConfigurationError):
            jacobi_rule(-1.0, 1.0, 4)
        with self.assertRaises(ConfigurationError):
            jacobi_rule(0.0, 0.0, 4)
        with self.assertRaises(ConfigurationError):
            jacobi_rule(0.0, 1.0, 0)

    def test_graded_composite_rule(self):
        x, w = composite_gauss(graded_breaks(0.0, 1.0, "a", levels=12), 8)
        self.assertAlmostEqual(float(np.dot(w, x ** -0.5)), 2.0, places=4)


class TestDirectionalDerivatives(unittest.TestCase):
    """Exact derivatives for symbolic fields, extrapolated differences otherwise."""

    def setUp(self):
        self.expr = sp.sin(X1) * sp.cos(X2) * X3
        self.symbolic = SymbolicField(self.expr, SPACE)
        self.numeric = CallableField(lambda X: np.sin(X[:, 0]) * np.cos(X[:, 1]) * X[:, 2], 3)
        self.X = np.array([[0.3, 0.2, 0.7], [1.1, -0.5, 0.4]])

    def test_first_and_second_order(self):
        eye = np.eye(3)
        g = np.array([1.0, 2.0, 2.0]) / 3.0
        for directions in ([eye[0]], [g], [eye[0], eye[1]], [g, eye[2]]):
            exact = directional_derivative(self.symbolic, directions, self.X)
            approx = directional_derivative(self.numeric, directions, self.X)
            np.testing.assert_allclose(approx, exact, rtol=1e-6, atol=1e-7)

    def test_third_order(self):
        eye = np.eye(3)
        directions = [eye[0], eye[0], eye[1]]
        exact = directional_derivative(self.symbolic, directions, self.X)
        approx = directional_derivative(self.numeric, directions, self.X)
        np.testing.assert_allclose(approx, exact, rtol=1e-4, atol=1e-4)

    def test_order_four_needs_analytic_field(self):
        with self.assertRaises(ConfigurationError):
            directional_derivative(self.numeric, [np.eye(3)[0]] * 4, self.X)
        values = directional_derivative(self.symbolic, [np.eye(3)[0]] * 4, self.X)
        np.testing.assert_allclose(values, np.sin(self.X[:, 0]) * np.cos(self.X[:, 1]) * self.X[:, 2])

    def test_multi_indices(self):
        self.assertEqual(len(MultiIndex.of_order(3)), 10)
        self.assertEqual(len(MultiIndex.of_order(2, axes=(0, 2))), 3)
        self.assertEqual(MultiIndex.coerce((1, 0, 2)).order, 3)
        with self.assertRaises(ConfigurationError):
            MultiIndex.coerce((1, 2))


class TestWeightedNorms(unittest.TestCase):
    """Weighted L² norms over regular and singular regions."""

    def test_unit_ball(self):
        r = SymbolicField(sp.sqrt(X1 ** 2 + X2 ** 2 + X3 ** 2), SPACE)
        result = weighted_norm(r, BallRegion([0.0, 0.0, 0.0], 1.0))
        self.assertAlmostEqual(result.value, math.sqrt(4.0 * math.pi / 5.0), places=10)

    def test_homogeneous_singularity(self):
        # ‖|x|^a‖² over B_R is 4πR^{2a+3}/(2a+3)
        a = -0.5
        u = SymbolicField((X1 ** 2 + X2 ** 2 + X3 ** 2) ** sp.Rational(-1, 4), SPACE)
        for R in (0.5, 2.0):
            result = weighted_norm(u, BallRegion([0.0, 0.0, 0.0], R, singular=True))
            self.assertFalse(result.divergent)
            exact = math.sqrt(4.0 * math.pi * R ** (2 * a + 3) / (2 * a + 3))
            self.assertAlmostEqual(result.value / exact, 1.0, delta=1e-3)

    def test_box_volume(self):
        result = weighted_norm(SymbolicField(sp.Integer(1), SPACE), BoxRegion([0, 0, 0], [1, 2, 3]))
        self.assertAlmostEqual(result.squared, 6.0, places=12)


class TestFaceFrontier(unittest.TestCase):
    """r_f^s traces near a face: finite below t = 1/2, divergent above."""

    @classmethod
    def setUpClass(cls):
        cls.P = unit_cube()
        cls.s = 0.5
        cls.spec = NeighborhoodSpec(kind="f", xi=0.2, face=0)
        cls.region = NeighborhoodRegion(cls.P, cls.spec)
        smooth = gaussian([0.5, 0.5, 0.0], 0.3, axes=(0, 1))
        cls.u = face_power(cls.s, cls.P.inward_normal(0), cls.P.vertices[cls.P.faces[0][0]], smooth)

    def _norm(self, t):
        w = WeightSpec.regularity(self.spec, (0, 0, 0), t, self.s)
        return weighted_norm(self.u, self.region, w, (0, 0, 0), frame_for(self.P, self.spec))

    def test_below_half(self):
        result = self._norm(0.45)
        self.assertFalse(result.divergent)
        self.assertTrue(math.isfinite(result.value))
        q = result.sums[-1] / result.sums[-2]
        self.assertAlmostEqual(q, 2.0 ** -0.1, delta=0.01)

    def test_above_half(self):
        result = self._norm(0.55)
        self.assertTrue(result.divergent)
        self.assertEqual(result.value, math.inf)
        self.assertFalse(WeightSpec(t=0.55).in_range)


class TestSlobodeckij(unittest.TestCase):
    """Monte-Carlo Slobodeckij seminorm against a reduced closed integral."""

    def test_linear_function_on_cube(self):
        # |x1|²_{H^{1/2}} on the unit cube equals 8∫(1−t)(1−ta)(1−tb)/(1+a²+b²) over (0,1)³
        x, w = composite_gauss(np.linspace(0.0, 1.0, 5), 8)
        T, A, B = np.meshgrid(x, x, x, indexing="ij")
        W = w[:, None, None] * w[None, :, None] * w[None, None, :]
        exact = 8.0 * float(np.sum(W * (1 - T) * (1 - T * A) * (1 - T * B) / (1 + A ** 2 + B ** 2)))
        u = CallableField(lambda X: X[:, 0], 3)
        estimate = slobodeckij(u, BoxRegion([0, 0, 0], [1, 1, 1]), 0.5, budget=200000, seed=7)
        self.assertLess(abs(estimate.value - exact), 4.0 * estimate.stderr + 0.01 * exact)
        self.assertLess(estimate.relative_error, 0.03)

    def test_reproducible(self):
        u = CallableField(lambda X: X[:, 0] ** 2, 3)
        box = BoxRegion([0, 0, 0], [1, 1, 1])
        a = slobodeckij(u, box, 0.3, budget=1000, seed=3)
        b = slobodeckij(u, box, 0.3, budget=1000, seed=3)
        self.assertEqual(a.value, b.value)

    def test_invalid_order(self):
        with self.assertRaises(ConfigurationError):
            slobodeckij(CallableField(lambda X: X[:, 0], 3), BoxRegion([0, 0, 0], [1, 1, 1]), 1.0)


if __name__ == "__main__":
    unittest.main()
