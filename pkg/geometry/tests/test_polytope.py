#!/usr/bin/env python
"""
Test cases for polytope loading, adjacency and distance fields.
"""

import json
import os
import sys
import tempfile
import unittest

import numpy as np

# Add parent directory to path to import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from errors import (ConfigurationError, DegenerateFaceError, DomainError, OpenBoundaryError,
                    PolytopeParseError, SingularPointError)
from geometry.polytope import Polytope, load_polytope
from geometry.shapes import DATA_DIR, l_prism, reference_tetrahedron, unit_cube
from utils import make_rng


class TestPolytopeLoading(unittest.TestCase):
    """Loading polytope files and validating their combinatorics."""

    def test_cube_file(self):
        P = load_polytope(os.path.join(DATA_DIR, "cube.json"))
        self.assertEqual((P.n_vertices, P.n_edges, P.n_faces), (8, 12, 6))
        self.assertEqual(P.name, "cube")

    def test_tetrahedron_file(self):
        P = load_polytope(os.path.join(DATA_DIR, "tetrahedron.json"))
        self.assertEqual((P.n_vertices, P.n_edges, P.n_faces), (4, 6, 4))

    def test_lprism_file_matches_builder(self):
        P = load_polytope(os.path.join(DATA_DIR, "lprism.json"))
        Q = l_prism()
        self.assertEqual((P.n_vertices, P.n_edges, P.n_faces), (12, 18, 8))
        self.assertAlmostEqual(P.volume, Q.volume, places=12)
        self.assertAlmostEqual(P.volume, 3.0, places=12)

    def test_open_boundary(self):
        with self.assertRaises(OpenBoundaryError):
            load_polytope(os.path.join(DATA_DIR, "cube_open.json"))

    def test_invalid_json(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "broken.json")
            with open(path, "w") as f:
                f.write("{\"vertices\": [[0, 0, 0]")
            with self.assertRaises(PolytopeParseError):
                load_polytope(path)

    def test_missing_key(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "nofaces.json")
            with open(path, "w") as f:
                json.dump({"vertices": [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]}, f)
            with self.assertRaises(PolytopeParseError):
                load_polytope(path)

    def test_degenerate_face(self):
        vertices = [[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0]]
        faces = [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]
        with self.assertRaises(DegenerateFaceError):
            Polytope(vertices, faces)

    def test_non_planar_face(self):
        P = unit_cube()
        vertices = P.vertices.copy()
        vertices[6] = [1.0, 1.0, 1.2]
        with self.assertRaises(PolytopeParseError):
            Polytope(vertices, P.faces)

    def test_outward_normals_after_reversal(self):
        P = unit_cube()
        reversed_faces = [list(reversed(loop)) for loop in P.faces]
        Q = Polytope(P.vertices, reversed_faces)
        centroid = Q.vertices.mean(axis=0)
        for f in range(Q.n_faces):
            face_center = Q.vertices[list(Q.faces[f])].mean(axis=0)
            self.assertGreater((face_center - centroid) @ Q.normals[f], 0.0)


class TestPolytopeInvariants(unittest.TestCase):
    """Type invariants that hold for every reference polytope."""

    def setUp(self):
        self.polytopes = [unit_cube(), reference_tetrahedron(), l_prism()]

    def test_unit_edge_directions(self):
        for P in self.polytopes:
            self.assertLessEqual(np.max(np.abs(np.linalg.norm(P.edge_directions, axis=1) - 1.0)), 1e-12)

    def test_faces_coplanar_with_unit_normals(self):
        for P in self.polytopes:
            self.assertLessEqual(np.max(np.abs(np.linalg.norm(P.normals, axis=1) - 1.0)), 1e-12)
            for f, loop in enumerate(P.faces):
                pts = P.vertices[list(loop)]
                self.assertLessEqual(np.max(np.abs(pts @ P.normals[f] - P.offsets[f])), 1e-10)

    def test_adjacency_consistent(self):
        for P in self.polytopes:
            for e, (i, j) in enumerate(P.V_e):
                self.assertIn(e, P.E_v[i])
                self.assertIn(e, P.E_v[j])
                self.assertEqual(len(P.F_e[e]), 2)
                for f in P.F_e[e]:
                    self.assertIn(e, P.E_f[f])
            for v in range(P.n_vertices):
                for f in P.F_v[v]:
                    self.assertIn(v, P.V_f[f])

    def test_cube_indexing(self):
        P = unit_cube()
        np.testing.assert_allclose(P.edge_directions[0], [1.0, 0.0, 0.0])
        np.testing.assert_allclose(P.inward_normal(0), [0.0, 0.0, 1.0])
        self.assertEqual(P.F_e[0], (0, 2))

    def test_interior_angles(self):
        P = unit_cube()
        for e in range(P.n_edges):
            self.assertAlmostEqual(P.interior_angle(e), np.pi / 2, places=12)
        L = l_prism()
        reentrant = L.edge_index[(3, 9)]
        self.assertAlmostEqual(L.interior_angle(reentrant), 1.5 * np.pi, places=12)


class TestDistances(unittest.TestCase):
    """Distance and relative-distance functions."""

    def setUp(self):
        self.cube = unit_cube()

    def test_vertex_distance(self):
        r_v, _, _, _ = self.cube.dist_features([0.3, 0.0, 0.0])
        self.assertAlmostEqual(r_v[0], 0.3, places=14)

    def test_edge_distance(self):
        _, r_e, _, _ = self.cube.dist_features([0.5, 0.1, 0.0])
        self.assertAlmostEqual(r_e[0], 0.1, places=14)

    def test_center_boundary_distance(self):
        _, _, r_f, r_bnd = self.cube.dist_features([0.5, 0.5, 0.5])
        self.assertAlmostEqual(r_bnd, 0.5, places=14)
        np.testing.assert_allclose(r_f, 0.5)

    def test_outside_point(self):
        with self.assertRaises(DomainError):
            self.cube.dist_features([1.5, 0.5, 0.5])

    def test_face_distance_uses_closed_polygon(self):
        d = self.cube.distances(np.array([[1.5, 0.5, -0.5]]))
        # nearest point of the face z=0 is on its rim x=1
        self.assertAlmostEqual(d.r_f[0, 0], np.sqrt(0.5), places=12)

    def test_nonconvex_boundary_distance(self):
        L = l_prism()
        _, _, _, r_bnd = L.dist_features([0.9, 0.9, 0.5])
        self.assertAlmostEqual(r_bnd, np.sqrt(0.02), places=12)

    def test_rho(self):
        rho_ve, rho_ef = self.cube.rho([0.3, 0.1, 0.0], 0, 0, 0)
        self.assertAlmostEqual(rho_ve, 0.1 / np.sqrt(0.1), places=12)
        self.assertAlmostEqual(rho_ve, 0.31623, places=5)
        self.assertEqual(rho_ef, 0.0)

    def test_rho_on_edge(self):
        rho_ve, rho_ef = self.cube.rho([0.3, 0.0, 0.0], 0, 0)
        self.assertEqual(rho_ve, 0.0)
        self.assertIsNone(rho_ef)

    def test_rho_singular(self):
        with self.assertRaises(SingularPointError):
            self.cube.rho([0.0, 0.0, 0.0], 0, 0, 0)
        with self.assertRaises(SingularPointError):
            self.cube.rho([0.3, 0.0, 0.0], 0, 0, 0)

    def test_contains(self):
        inside = self.cube.contains(np.array([[0.5, 0.5, 0.5], [1.5, 0.5, 0.5], [1.0, 0.5, 0.5]]))
        np.testing.assert_array_equal(inside, [True, False, True])
        L = l_prism()
        np.testing.assert_array_equal(L.contains(np.array([[1.5, 1.5, 0.5], [0.5, 1.5, 0.5]])), [False, True])

    def test_sample_interior(self):
        L = l_prism()
        X = L.sample_interior(2000, make_rng(0, "test-sample-interior"))
        self.assertEqual(X.shape, (2000, 3))
        self.assertTrue(np.all(L.contains(X)))

    def test_scaled(self):
        Q = self.cube.scaled(2.0)
        self.assertEqual(Q.length_scale, 2.0)
        d = Q.distances(np.array([[0.6, 0.2, 0.0]]))
        self.assertAlmostEqual(d.r_e[0, 0], 0.2, places=14)
        self.assertAlmostEqual(Q.volume, 8.0, places=12)


class TestFeatureSeparation(unittest.TestCase):
    """Admissible ξ from the feature separation."""

    def test_cube(self):
        P = unit_cube()
        self.assertAlmostEqual(P.min_feature_separation, 1.0, places=12)
        self.assertAlmostEqual(P.max_admissible_xi(), 1.0 / (2.0 * np.sqrt(3.0)), places=12)
        P.check_xi(0.1)
        with self.assertRaises(ConfigurationError) as ctx:
            P.check_xi(0.3)
        self.assertEqual(ctx.exception.key, "xi")

    def test_lprism(self):
        L = l_prism()
        self.assertAlmostEqual(L.diameter, 3.0, places=12)
        self.assertAlmostEqual(L.min_feature_separation, 1.0, places=12)
        self.assertAlmostEqual(L.max_admissible_xi(), 1.0 / 6.0, places=12)

    def test_tetrahedron(self):
        T = reference_tetrahedron()
        self.assertAlmostEqual(T.min_feature_separation, 1.0 / np.sqrt(3.0), places=12)
        self.assertAlmostEqual(T.diameter, np.sqrt(2.0), places=12)

    def test_xi_out_of_range(self):
        with self.assertRaises(ConfigurationError):
            unit_cube().check_xi(0.0)


if __name__ == "__main__":
    unittest.main()
