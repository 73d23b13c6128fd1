#!/usr/bin/env python
"""
Test cases for the neighborhood coverings and their overlap certificates.
"""

import os
import sys
import tempfile
import unittest

import numpy as np
from pydantic import ValidationError

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from errors import ConfigurationError
from geometry.covering import (Covering, CoveringElement, certify_overlap, check_admissible, cover,
                               export_covering, load_covering, refine_toward_feature)
from geometry.charts import NeighborhoodChart
from geometry.partition import NeighborhoodSpec, all_specs, region_mask
from geometry.shapes import l_prism, unit_cube


class TestAdmissibility(unittest.TestCase):
    """Parameter checks before any element is built."""

    def setUp(self):
        self.cube = unit_cube()

    def test_scale_order(self):
        spec = NeighborhoodSpec(kind="v", xi=0.25, vertex=0)
        with self.assertRaises(ConfigurationError) as ctx:
            check_admissible(self.cube, spec, 0.5, 0.5)
        self.assertEqual(ctx.exception.key, "chat")
        with self.assertRaises(ConfigurationError) as ctx:
            check_admissible(self.cube, spec, 1.2, 0.5)
        self.assertEqual(ctx.exception.key, "c")

    def test_interior_has_no_covering(self):
        with self.assertRaises(ConfigurationError) as ctx:
            cover(self.cube, NeighborhoodSpec(kind="int", xi=0.1), depth=2)
        self.assertEqual(ctx.exception.key, "kind")

    def test_half_ball_xi_limit(self):
        spec = NeighborhoodSpec(kind="ef", xi=0.2, edge=0, face=0)
        with self.assertRaises(ConfigurationError) as ctx:
            check_admissible(self.cube, spec, 0.25, 0.5)
        self.assertEqual(ctx.exception.key, "xi")
        check_admissible(self.cube, NeighborhoodSpec(kind="ef", xi=0.15, edge=0, face=0), 0.25, 0.5)

    def test_depth_must_be_positive(self):
        with self.assertRaises(ConfigurationError):
            cover(self.cube, NeighborhoodSpec(kind="ef", xi=0.15, edge=0, face=0), depth=0)

    def test_element_scales(self):
        with self.assertRaises(ValidationError):
            CoveringElement(shape="ball", center=(0.5, 0.5, 0.5), radius=0.1, c=0.5, chat=0.4)


class TestBallCovering(unittest.TestCase):
    """Vertex neighborhood of the cube covered by balls."""

    @classmethod
    def setUpClass(cls):
        cls.cube = unit_cube()
        cls.spec = NeighborhoodSpec(kind="v", xi=0.25, vertex=0)
        cls.cov = cover(cls.cube, cls.spec, c=0.25, chat=0.5, depth=3)
        cls.certificate = certify_overlap(cls.cov, samples=3000, seed=1)

    def test_elements_are_inscribed_balls(self):
        self.assertGreater(len(self.cov), 0)
        self.assertTrue(all(el.shape == "ball" for el in self.cov.elements[:50]))
        self.assertTrue(np.all(self.cube.contains(self.cov.centers)))
        self.assertEqual(self.certificate.invalid_elements, 0)

    def test_full_coverage(self):
        self.assertEqual(self.certificate.uncovered, 0)
        self.assertEqual(self.certificate.coverage, 1.0)

    def test_finite_overlap(self):
        self.assertGreaterEqual(self.certificate.n_emp, 1)
        self.assertEqual(sum(self.certificate.histogram.values()), self.certificate.evaluated)
        self.assertEqual(len(self.certificate.c_b), 3)
        self.assertTrue(all(np.isfinite(self.certificate.c_b)))

    def test_generations_contract(self):
        radii = self.cov.generation_radii()
        self.assertEqual(len(radii), 3)
        self.assertAlmostEqual(np.median(radii[1]) / np.median(radii[0]), 0.5, places=12)
        self.assertAlmostEqual(self.cov.excluded_radius, 0.25 / 8, places=15)


class TestHalfBallCovering(unittest.TestCase):
    """Edge-face neighborhood of the cube covered by half-balls."""

    @classmethod
    def setUpClass(cls):
        cls.cube = unit_cube()
        cls.spec = NeighborhoodSpec(kind="ef", xi=0.15, edge=0, face=0)
        cls.cov = cover(cls.cube, cls.spec, c=0.25, chat=0.5, depth=4)

    def test_centers_on_face(self):
        d = self.cube.distances(self.cov.centers)
        self.assertLess(np.max(d.r_f[:, 0]), 1e-10)
        others = [g for g in range(self.cube.n_faces) if g != 0]
        self.assertTrue(np.all(d.r_f[:, others].min(axis=1) > self.cov.chat * self.cov.deltas))
        self.assertEqual(self.cov.invalid_elements(), 0)

    def test_overlap_independent_of_depth(self):
        shallow = certify_overlap(self.cov, samples=2000, seed=3)
        deep = certify_overlap(cover(self.cube, self.spec, c=0.25, chat=0.5, depth=6), samples=2000, seed=3)
        self.assertEqual(shallow.n_emp, deep.n_emp)
        self.assertEqual(shallow.uncovered, 0)
        self.assertEqual(deep.uncovered, 0)

    def test_refine_keeps_existing_elements(self):
        finer = refine_toward_feature(self.cov, 2)
        n = len(self.cov)
        self.assertEqual(finer.depth, 6)
        self.assertGreater(len(finer), n)
        np.testing.assert_array_equal(finer.centers[:n], self.cov.centers)
        np.testing.assert_array_equal(finer.deltas[:n], self.cov.deltas)
        radii = finer.generation_radii()
        self.assertAlmostEqual(np.median(radii[5]) / np.median(radii[4]), 0.5, places=12)
        self.assertLess(finer.excluded_radius, self.cov.excluded_radius)

    def test_export_round_trip(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "ef.jsonl")
            export_covering(self.cov, path)
            elements = load_covering(path)
        self.assertEqual(len(elements), len(self.cov))
        self.assertEqual(elements[0], self.cov.elements[0])
        rebuilt = Covering.from_elements(self.cube, self.spec, elements)
        self.assertEqual(rebuilt.depth, self.cov.depth)
        np.testing.assert_allclose(rebuilt.radii, self.cov.radii, rtol=1e-14)


class TestHandPickedCoverings(unittest.TestCase):
    """Overlap counts of coverings with a known answer."""

    def setUp(self):
        self.cube = unit_cube()
        self.spec = NeighborhoodSpec(kind="v", xi=0.25, vertex=0)

    def _ball(self, center):
        delta = float(self.cube.distances(np.array([center])).r_bnd[0])
        return CoveringElement(shape="ball", center=tuple(center), radius=0.25 * delta, c=0.25, chat=0.5)

    def test_single_element(self):
        cov = Covering.from_elements(self.cube, self.spec, [self._ball([0.12, 0.12, 0.12])])
        certificate = certify_overlap(cov, samples=2000, seed=0)
        self.assertEqual(certificate.n_emp, 1)
        self.assertGreater(certificate.uncovered, 0)

    def test_disjoint_elements(self):
        elements = [self._ball([0.12, 0.12, 0.12]), self._ball([0.2, 0.04, 0.1])]
        cov = Covering.from_elements(self.cube, self.spec, elements)
        self.assertEqual(certify_overlap(cov, samples=2000, seed=0).n_emp, 1)

    def test_elements_must_share_scales(self):
        a = self._ball([0.12, 0.12, 0.12])
        b = CoveringElement(shape="ball", center=(0.2, 0.04, 0.1), radius=0.01, c=0.3, chat=0.5)
        with self.assertRaises(ConfigurationError):
            Covering.from_elements(self.cube, self.spec, [a, b])


class TestReentrantCoverings(unittest.TestCase):
    """Coverings at the reentrant edge and vertex of the L-shaped prism."""

    def setUp(self):
        self.P = l_prism()
        self.edge = self.P.edge_index[(3, 9)]

    def _check(self, spec, depth=3):
        cov = cover(self.P, spec, c=0.25, chat=0.5, depth=depth)
        certificate = certify_overlap(cov, samples=2000, seed=5)
        self.assertEqual(certificate.uncovered, 0, msg=spec.label)
        self.assertEqual(certificate.invalid_elements, 0, msg=spec.label)
        self.assertGreaterEqual(certificate.n_emp, 1)
        return cov

    def test_edge(self):
        cov = self._check(NeighborhoodSpec(kind="e", xi=0.15, edge=self.edge))
        self.assertEqual(cov.shape, "ball")

    def test_edge_face(self):
        for f in self.P.F_e[self.edge]:
            cov = self._check(NeighborhoodSpec(kind="ef", xi=0.15, edge=self.edge, face=f))
            self.assertEqual(cov.shape, "half_ball")

    def test_vertex_face(self):
        f = self.P.F_e[self.edge][0]
        cov = self._check(NeighborhoodSpec(kind="vf", xi=0.15, vertex=3, face=f))
        self.assertEqual(cov.shape, "half_ball")


def truncated_region_samples(P, spec, cov, n, seed):
    """Uniform points of Ω ∩ ω with excluded radius ≤ r_S < r0, drawn without the covering's own sampler."""
    chart = NeighborhoodChart(P, spec)
    rng = np.random.default_rng(seed)
    accepted, count = [], 0
    for _ in range(400):
        X = chart.sample(4 * n, rng, cov.excluded_radius, cov.r0)
        r_s = chart.singular_distance(X)
        keep = (r_s >= cov.excluded_radius) & (r_s < cov.r0)
        keep &= P.contains(X) & region_mask(P, spec, X)
        accepted.append(X[keep])
        count += int(np.count_nonzero(keep))
        if count >= n:
            break
    return np.concatenate(accepted)[:n]


class TestCoverageOfTruncatedRegions(unittest.TestCase):
    """Every kind of region is covered over its whole truncated neighborhood, not only near one point."""

    KINDS = ("v", "e", "f", "ve", "vf", "ef", "vef")

    def _assert_covered(self, P, spec, depth=3, n=20000):
        cov = cover(P, spec, c=0.25, chat=0.5, depth=depth)
        X = truncated_region_samples(P, spec, cov, n, seed=11)
        self.assertGreater(len(X), n // 2, msg=spec.label)
        self.assertGreaterEqual(cov.covered(X).mean(), 0.9999, msg=spec.label)
        return cov, X

    def test_cube_every_kind(self):
        cube = unit_cube()
        specs = all_specs(cube, 0.15)
        for kind in self.KINDS:
            spec = next(s for s in specs if s.kind == kind)
            with self.subTest(kind=kind):
                self._assert_covered(cube, spec)

    def test_lprism_every_kind(self):
        P = l_prism()
        edge = P.edge_index[(3, 9)]
        face = P.F_e[edge][0]
        specs = {
            "v": NeighborhoodSpec(kind="v", xi=0.15, vertex=3),
            "e": NeighborhoodSpec(kind="e", xi=0.15, edge=edge),
            "f": NeighborhoodSpec(kind="f", xi=0.15, face=face),
            "ve": NeighborhoodSpec(kind="ve", xi=0.15, vertex=3, edge=edge),
            "vf": NeighborhoodSpec(kind="vf", xi=0.15, vertex=3, face=face),
            "ef": NeighborhoodSpec(kind="ef", xi=0.15, edge=edge, face=face),
            "vef": NeighborhoodSpec(kind="vef", xi=0.15, vertex=3, edge=edge, face=face),
        }
        for kind in self.KINDS:
            with self.subTest(kind=kind):
                self._assert_covered(P, specs[kind])

    def test_points_far_along_the_edge(self):
        cube = unit_cube()
        spec = NeighborhoodSpec(kind="ef", xi=0.15, edge=0, face=cube.F_e[0][0])
        cov, X = self._assert_covered(cube, spec)
        far = np.abs(cov.tile_coordinates(X)[:, 0]) > 3 * cov.period
        self.assertGreater(np.count_nonzero(far), 0)
        self.assertTrue(np.all(cov.target_mask(X[far])))
        self.assertTrue(np.all(cov.covered(X[far])))


class TestTiledCoverings(unittest.TestCase):
    """Edge and face coverings: one tile of rows per generation, repeated along the feature."""

    @classmethod
    def setUpClass(cls):
        cls.cube = unit_cube()
        cls.edge_spec = NeighborhoodSpec(kind="e", xi=0.15, edge=0)
        cls.face_spec = NeighborhoodSpec(kind="f", xi=0.15, face=0)
        cls.edge_cov = cover(cls.cube, cls.edge_spec, c=0.25, chat=0.5, depth=3)
        cls.face_cov = cover(cls.cube, cls.face_spec, c=0.25, chat=0.5, depth=3)

    def test_vertex_coverings_are_not_tiled(self):
        cov = cover(self.cube, NeighborhoodSpec(kind="v", xi=0.25, vertex=0), c=0.25, chat=0.5, depth=2)
        self.assertFalse(cov.tiled)
        self.assertEqual(cov.n_instances, len(cov))
        self.assertEqual(cov.elements[0].n_copies, 1)

    def test_translates_span_the_feature(self):
        for cov in (self.edge_cov, self.face_cov):
            self.assertTrue(cov.tiled)
            self.assertGreater(cov.n_instances, len(cov))
            for k in range(cov.depth):
                lo, hi = cov.copy_range(k)
                T = cov.period * 2.0 ** (-k)
                self.assertTrue(np.all(lo * T <= cov.tile_extent[:, 0]))
                self.assertTrue(np.all(hi * T >= cov.tile_extent[:, 1]))

    def test_certificate_samples_whole_edge(self):
        X0 = self.edge_cov.base_samples(2000, np.random.default_rng(2))
        s = self.edge_cov.tile_coordinates(X0)[:, 0]
        self.assertGreater(np.ptp(s), 5 * self.edge_cov.period)
        X, gens = self.edge_cov.scaled_samples(X0)
        deep = self.edge_cov.tile_coordinates(X[gens == 2])[:, 0]
        self.assertGreater(np.ptp(deep), 5 * self.edge_cov.period)

    def test_certificate_counts_translates(self):
        for cov in (self.edge_cov, self.face_cov):
            certificate = certify_overlap(cov, samples=3000, seed=4)
            self.assertEqual(certificate.instances, cov.n_instances)
            self.assertEqual(certificate.uncovered, 0, msg=cov.spec.label)
            self.assertEqual(certificate.coverage, 1.0)
            self.assertEqual(certificate.invalid_elements, 0, msg=cov.spec.label)

    def test_overlap_is_periodic(self):
        cov = self.edge_cov
        X = truncated_region_samples(self.cube, self.edge_spec, cov, 3000, seed=8)
        shift = cov.period * cov.tile_axes[0]
        inner = np.abs(cov.tile_coordinates(X)[:, 0]) < 0.2
        X = X[inner]
        np.testing.assert_array_equal(cov.overlap_counts(X), cov.overlap_counts(X + shift))

    def test_export_carries_periods(self):
        el = self.face_cov.elements[0]
        self.assertEqual(len(el.periods), 2)
        self.assertEqual(len(el.copies), 2)
        self.assertGreater(el.n_copies, 1)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "f.jsonl")
            export_covering(self.face_cov, path)
            elements = load_covering(path)
        self.assertEqual(elements[0], el)

    def test_period_needs_copy_range(self):
        with self.assertRaises(ValidationError):
            CoveringElement(shape="half_ball", center=(0.5, 0.5, 0.0), radius=0.001, c=0.25, chat=0.5,
                            periods=((0.01, 0.0, 0.0),))


if __name__ == "__main__":
    unittest.main()
