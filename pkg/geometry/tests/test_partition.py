#!/usr/bin/env python
"""
Test cases for the neighborhood partition, frames and region tests.
"""

import os
import sys
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from errors import ConfigurationError, DomainError
from geometry.partition import (CANONICAL_FRAME, Frame, NeighborhoodSpec, all_specs, classification_histogram, classify,
                                classify_batch, expected_features, feature_equivalence_constants,
                                features_in_range, frame_for,
                                region_mask, region_test)
from geometry.shapes import l_prism, unit_cube
from utils import make_rng


class TestNeighborhoodSpec(unittest.TestCase):
    """Validation of region specs."""

    def test_features_match_kind(self):
        NeighborhoodSpec(kind="vef", xi=0.1, vertex=0, edge=0, face=0)
        with self.assertRaises(ValidationError):
            NeighborhoodSpec(kind="ve", xi=0.1, vertex=0)
        with self.assertRaises(ValidationError):
            NeighborhoodSpec(kind="int", xi=0.1, face=2)
        with self.assertRaises(ValidationError):
            NeighborhoodSpec(kind="v", xi=0.0, vertex=0)

    def test_incidence_checked(self):
        P = unit_cube()
        with self.assertRaises(DomainError):
            NeighborhoodSpec(kind="ve", xi=0.1, vertex=6, edge=0).check_features(P)

    def test_label(self):
        spec = NeighborhoodSpec(kind="ef", xi=0.1, edge=3, face=1)
        self.assertEqual(spec.label, "ef[e3,f1]")

    def test_all_specs_count(self):
        self.assertEqual(len(all_specs(unit_cube(), 0.1)), 147)


class TestClassify(unittest.TestCase):
    """Point classification into the neighborhoods."""

    def setUp(self):
        self.cube = unit_cube()

    def test_center_is_interior(self):
        result = classify(self.cube, [0.5, 0.5, 0.5], 0.1)
        self.assertEqual({s.kind for s in result}, {"int"})

    def test_vertex_edge_face_point(self):
        result = classify(self.cube, [0.05, 0.004, 0.0002], 0.1)
        self.assertEqual(result, frozenset({NeighborhoodSpec(kind="vef", xi=0.1, vertex=0, edge=0, face=0)}))

    def test_outside_point(self):
        with self.assertRaises(DomainError):
            classify(self.cube, [1.2, 0.5, 0.5], 0.1)

    def test_xi_too_large(self):
        with self.assertRaises(ConfigurationError):
            classify(self.cube, [0.5, 0.5, 0.5], 0.3)

    def test_threshold_is_strict(self):
        # r_v = ξ exactly: outer thresholds are strict, complement conditions are not
        result = classify(self.cube, [0.1, 0.0, 0.0], 0.1)
        self.assertEqual({s.kind for s in result}, {"e"})

    def test_face_far_from_one_of_its_edges(self):
        # face z=0 is near the x-axis edge but far relative to the y-axis edge
        x = [0.05, 0.02, 0.008]
        spec_v = NeighborhoodSpec(kind="v", xi=0.2, vertex=0)
        spec_vf = NeighborhoodSpec(kind="vf", xi=0.2, vertex=0, face=0)
        self.assertTrue(region_mask(self.cube, spec_v, x)[0])
        self.assertFalse(region_mask(self.cube, spec_vf, x)[0])
        self.assertEqual({s.kind for s in classify(self.cube, x, 0.2)}, {"v"})

    def test_decomposition_cube(self):
        self._check_decomposition(self.cube, 100000)

    def test_decomposition_lprism(self):
        self._check_decomposition(l_prism(), 100000)

    def _check_decomposition(self, P, n):
        X = P.sample_interior(n, make_rng(0, f"test-decomposition:{P.name}"))
        masks = classify_batch(P, X, 0.1)
        covered = np.zeros(n, dtype=bool)
        for mask in masks.values():
            covered |= mask
        self.assertEqual(int(np.count_nonzero(~covered)), 0)

    def test_each_region_abuts_its_own_features(self):
        for P in (self.cube, l_prism()):
            X = P.sample_interior(20000, make_rng(0, f"test-abut:{P.name}"))
            dist = P.distances(X)
            for spec in all_specs(P, 0.1):
                rows = np.flatnonzero(region_test(P, spec, dist))
                expected = expected_features(spec)
                for row in rows[:200]:
                    self.assertEqual(features_in_range(P, spec, dist, row), expected, msg=spec.label)

    def test_feature_equivalences(self):
        xi = 0.1
        X = self.cube.sample_interior(50000, make_rng(0, "test-equivalences"))
        dist = self.cube.distances(X)
        v_spec = NeighborhoodSpec(kind="v", xi=xi, vertex=0)
        rows = region_test(self.cube, v_spec, dist)
        self.assertTrue(np.any(rows))
        r_v = dist.r_v[rows, 0]
        for f in self.cube.F_v[0]:
            self.assertTrue(np.all(dist.r_f[rows, f] <= r_v))
            self.assertTrue(np.all(r_v <= dist.r_f[rows, f] / xi ** 2 * (1 + 1e-12)))
        for e in self.cube.E_v[0]:
            self.assertTrue(np.all(dist.r_e[rows, e] <= r_v))
        vef = NeighborhoodSpec(kind="vef", xi=xi, vertex=0, edge=0, face=0)
        X = np.array([[0.05, 0.004, 0.0002], [0.08, 0.002, 0.0001], [0.02, 0.001, 0.00001]])
        d = self.cube.distances(X)
        self.assertTrue(np.all(region_test(self.cube, vef, d)))
        self.assertTrue(np.all(d.r_f[:, 0] <= d.r_e[:, 0]))
        self.assertTrue(np.all(d.r_e[:, 0] <= d.r_v[:, 0]))

    def test_slack_is_superset(self):
        X = self.cube.sample_interior(5000, make_rng(0, "test-slack"))
        dist = self.cube.distances(X)
        for spec in all_specs(self.cube, 0.1)[:20]:
            exact = region_test(self.cube, spec, dist)
            loose = region_test(self.cube, spec, dist, slack=np.full(len(X), 0.01))
            self.assertTrue(np.all(loose[exact]))

    def test_region_mask_matches_classify(self):
        spec = NeighborhoodSpec(kind="vef", xi=0.1, vertex=0, edge=0, face=0)
        self.assertTrue(region_mask(self.cube, spec, [0.05, 0.004, 0.0002])[0])
        self.assertFalse(region_mask(self.cube, spec, [0.5, 0.5, 0.5])[0])

    @settings(max_examples=60, deadline=None)
    @given(
        x=st.tuples(*[st.floats(min_value=0.001, max_value=0.999, allow_nan=False)] * 3),
        lam=st.sampled_from([0.5, 2.0]),
    )
    def test_scale_equivariance(self, x, lam):
        P = self.cube
        Q = P.scaled(lam)
        original = classify(P, np.array(x), 0.1)
        scaled = classify(Q, lam * np.array(x), 0.1)
        self.assertEqual(original, scaled)


class TestFrames(unittest.TestCase):
    """Local frames of the regions."""

    def setUp(self):
        self.cube = unit_cube()

    def test_face_frame(self):
        frame = frame_for(self.cube, NeighborhoodSpec(kind="f", xi=0.1, face=0))
        np.testing.assert_allclose(frame.g_perp, [0.0, 0.0, 1.0], atol=1e-15)
        self.assertAlmostEqual(np.dot(frame.g_par, self.cube.normals[0]), 0.0, places=15)
        self.assertAlmostEqual(np.dot(frame.g_parperp, self.cube.normals[0]), 0.0, places=15)
        first_edge = self.cube.vertices[self.cube.faces[0][1]] - self.cube.vertices[self.cube.faces[0][0]]
        np.testing.assert_allclose(frame.g_par, first_edge, atol=1e-15)

    def test_edge_face_frame(self):
        frame = frame_for(self.cube, NeighborhoodSpec(kind="ef", xi=0.1, edge=0, face=0))
        np.testing.assert_allclose(frame.g_par, [1.0, 0.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(frame.g_parperp, [0.0, 1.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(frame.g_perp, [0.0, 0.0, 1.0], atol=1e-15)

    def test_vertex_frame_is_canonical(self):
        self.assertEqual(frame_for(self.cube, NeighborhoodSpec(kind="v", xi=0.1, vertex=3)), CANONICAL_FRAME)

    def test_frames_orthonormal_and_right_handed(self):
        for P in (self.cube, l_prism()):
            for spec in all_specs(P, 0.1):
                M = frame_for(P, spec).matrix()
                self.assertLessEqual(np.max(np.abs(M @ M.T - np.eye(3))), 1e-12)
                self.assertAlmostEqual(np.linalg.det(M[::-1]), 1.0, places=10)
                if spec.edge is not None:
                    d = P.edge_directions[spec.edge]
                    self.assertAlmostEqual(abs(M[2] @ d), 1.0, places=12)
                    self.assertAlmostEqual(M[0] @ d, 0.0, places=12)
                    self.assertAlmostEqual(M[1] @ d, 0.0, places=12)
                if spec.face is not None:
                    n = P.normals[spec.face]
                    self.assertAlmostEqual(abs(M[0] @ n), 1.0, places=12)
                    self.assertAlmostEqual(M[1] @ n, 0.0, places=12)
                    self.assertAlmostEqual(M[2] @ n, 0.0, places=12)

    def test_rejects_non_orthonormal(self):
        with self.assertRaises(ValidationError):
            Frame(g_perp=(0.0, 0.0, 1.0), g_parperp=(0.0, 1.0, 0.0), g_par=(1.0, 1.0, 0.0))
        with self.assertRaises(ValidationError):
            Frame(g_perp=(0.0, 0.0, -1.0), g_parperp=(0.0, 1.0, 0.0), g_par=(1.0, 0.0, 0.0))


class TestMonteCarloSummaries(unittest.TestCase):
    """Histograms and empirical distance constants over interior samples."""

    def test_histogram_covers_every_sample(self):
        P = unit_cube()
        histogram = classification_histogram(P, 0.1, 20000, seed=3)
        self.assertEqual(histogram.uncovered, 0)
        self.assertEqual(histogram.feature_mismatches, 0)
        self.assertGreaterEqual(sum(histogram.counts.values()), 20000)
        self.assertGreater(histogram.counts["int"], 0)
        self.assertGreaterEqual(histogram.max_memberships, 1)

    def test_histogram_is_reproducible(self):
        a = classification_histogram(l_prism(), 0.1, 5000, seed=1)
        b = classification_histogram(l_prism(), 0.1, 5000, seed=1)
        self.assertEqual(a, b)

    def test_equivalence_constants_bounded_by_one(self):
        constants = feature_equivalence_constants(unit_cube(), 0.2, 20000, seed=0)
        self.assertIn("ef", constants)
        self.assertEqual(set(constants["ef"]), {"r_f/r_e"})
        for entry in constants.values():
            for value in entry.values():
                self.assertLessEqual(value, 1.0 + 1e-12)
        self.assertNotIn("int", constants)


if __name__ == "__main__":
    unittest.main()
