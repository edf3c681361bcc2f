import tempfile
from math import sqrt
from pathlib import Path
from unittest import TestCase

import numpy as np

from r13_mfem.exceptions import DegenerateElementException, MeshException, PointLocationException
from r13_mfem.mesh import (
    Mesh, build_annulus_mesh, build_square_with_hole_mesh, build_unit_square_mesh, read_mesh, validate_mesh,
    write_mesh
)


def _euler(mesh: Mesh) -> int:
    return mesh.num_vertices - mesh.num_edges + mesh.num_triangles


class TestUnitSquareMesh(TestCase):
    def test_single_cell(self):
        mesh = build_unit_square_mesh(1)
        self.assertEqual(4, mesh.num_vertices)
        self.assertEqual(2, mesh.num_triangles)
        self.assertEqual(5, mesh.num_edges)
        self.assertEqual(4, len(mesh.boundary_edges))
        self.assertAlmostEqual(sqrt(2.0), mesh.h_max, places=14)
        self.assertAlmostEqual(45.0, validate_mesh(mesh).min_angle_degrees, places=10)

    def test_bottom_left_frame(self):
        mesh = build_unit_square_mesh(2)
        midpoints = mesh.vertices[mesh.boundary_vertices].mean(axis=1)
        b = int(np.argmin(np.linalg.norm(midpoints - [0.25, 0.0], axis=1)))
        np.testing.assert_allclose([0.0, -1.0], mesh.boundary_normals[b], atol=1e-15)
        np.testing.assert_allclose([1.0, 0.0], mesh.boundary_tangents[b], atol=1e-15)
        self.assertEqual(mesh.label_id('bottom'), mesh.boundary_labels[b])

    def test_topology_and_frames(self):
        mesh = build_unit_square_mesh(4)
        self.assertEqual(1, _euler(mesh))
        self.assertTrue(np.all(mesh.signed_areas > 0.0))
        self.assertAlmostEqual(1.0, mesh.area, places=14)
        np.testing.assert_allclose(0.0, np.einsum('bi,bi->b', mesh.boundary_normals, mesh.boundary_tangents),
                                   atol=1e-15)
        np.testing.assert_allclose(1.0, np.linalg.norm(mesh.boundary_normals, axis=1), atol=1e-15)
        midpoints = mesh.vertices[mesh.boundary_vertices].mean(axis=1)
        inward = mesh.centroids[mesh.boundary_triangles] - midpoints
        self.assertTrue(np.all(np.einsum('bi,bi->b', mesh.boundary_normals, inward) < 0.0))
        self.assertTrue(np.all(mesh.edge_counts[mesh.boundary_edges] == 1))
        self.assertEqual(56, mesh.num_edges)
        self.assertEqual(40, int(np.count_nonzero(mesh.edge_counts == 2)))

    def test_labels(self):
        mesh = build_unit_square_mesh(4)
        bottom = mesh.boundary_labels == mesh.label_id('bottom')
        self.assertEqual(4, int(np.count_nonzero(bottom)))
        self.assertEqual(12, int(np.count_nonzero(mesh.boundary_labels == mesh.label_id('rest'))))
        self.assertEqual(1, mesh.label_id('1'))
        with self.assertRaises(MeshException):
            mesh.label_id('inner')
        with self.assertRaises(MeshException):
            mesh.label_id('7')

    def test_symmetric_pattern(self):
        mesh = build_unit_square_mesh(4, 'symmetric')
        mirrored = mesh.vertices[mesh.triangles].copy()
        mirrored[..., 0] = 1.0 - mirrored[..., 0]
        original = {tuple(sorted(map(tuple, np.round(t, 12)))) for t in mesh.vertices[mesh.triangles]}
        reflected = {tuple(sorted(map(tuple, np.round(t, 12)))) for t in mirrored}
        self.assertEqual(original, reflected)
        with self.assertRaises(MeshException):
            build_unit_square_mesh(3, 'symmetric')

    def test_rejects_bad_arguments(self):
        with self.assertRaises(MeshException):
            build_unit_square_mesh(0)
        with self.assertRaises(MeshException):
            build_unit_square_mesh(2, 'crossed')


class TestAnnulusMesh(TestCase):
    def test_benchmark_radii(self):
        mesh = build_annulus_mesh(0.5, 2.0, 0.2)
        radii = np.linalg.norm(mesh.vertices[mesh.boundary_vertices.ravel()], axis=1)
        on_circle = np.minimum(np.abs(radii - 0.5), np.abs(radii - 2.0))
        self.assertLess(on_circle.max(), 1e-10)
        self.assertEqual(0, _euler(mesh))
        self.assertLessEqual(mesh.h_max, 1.5 * 0.2)
        report = validate_mesh(mesh)
        self.assertEqual(0, report.conformity_violations)
        self.assertEqual(0, report.orientation_violations)
        self.assertEqual(0, report.unlabeled_boundary_edges)
        self.assertTrue(report.ok)
        inner = mesh.boundary_labels == mesh.label_id('inner')
        np.testing.assert_allclose(0.5, np.linalg.norm(mesh.vertices[mesh.boundary_vertices[inner]], axis=2),
                                   atol=1e-10)

    def test_area_converges(self):
        exact = np.pi * (2.0 ** 2 - 0.5 ** 2)
        coarse = abs(build_annulus_mesh(0.5, 2.0, 0.4).area - exact)
        fine = abs(build_annulus_mesh(0.5, 2.0, 0.2).area - exact)
        self.assertLess(fine, coarse)
        self.assertLess(fine / exact, 1e-2)

    def test_rejects_bad_arguments(self):
        with self.assertRaises(MeshException):
            build_annulus_mesh(2.0, 0.5, 0.1)
        with self.assertRaises(MeshException):
            build_annulus_mesh(0.5, 2.0, 1.5)
        with self.assertRaises(MeshException):
            build_annulus_mesh(0.5, 2.0, 0.0)


class TestSquareWithHoleMesh(TestCase):
    def test_geometry(self):
        mesh = build_square_with_hole_mesh(0.5)
        self.assertEqual(0, _euler(mesh))
        inside = np.all((mesh.vertices > 1.0 + 1e-12) & (mesh.vertices < 3.0 - 1e-12), axis=1)
        self.assertFalse(np.any(inside))
        for corner in ([1.0, 1.0], [3.0, 1.0], [1.0, 3.0], [3.0, 3.0]):
            self.assertLess(np.linalg.norm(mesh.vertices - corner, axis=1).min(), 1e-12)
        self.assertAlmostEqual(64.0 - 4.0, mesh.area, places=10)

    def test_obstacle_normal(self):
        mesh = build_square_with_hole_mesh(0.5)
        midpoints = mesh.vertices[mesh.boundary_vertices].mean(axis=1)
        on_face = (np.abs(midpoints[:, 0] - 1.0) < 1e-12) & (midpoints[:, 1] > 1.0) & (midpoints[:, 1] < 3.0)
        self.assertGreater(np.count_nonzero(on_face), 0)
        np.testing.assert_allclose([1.0, 0.0], mesh.boundary_normals[on_face][0], atol=1e-15)
        self.assertTrue(np.all(mesh.boundary_labels[on_face] == mesh.label_id('inner')))

    def test_rejects_bad_size(self):
        with self.assertRaises(MeshException):
            build_square_with_hole_mesh(0.75)


class TestValidateAndFiles(TestCase):
    def test_flipped_triangle(self):
        mesh = build_unit_square_mesh(2)
        triangles = np.array(mesh.triangles)
        triangles[0] = triangles[0, [0, 2, 1]]
        flipped = Mesh(mesh.vertices, triangles, mesh.labeled_edges())
        report = validate_mesh(flipped)
        self.assertEqual(1, report.orientation_violations)
        self.assertFalse(report.ok)
        self.assertIsInstance(report.describe(), str)
        with self.assertRaises(DegenerateElementException):
            _ = flipped.areas
        # the outward normal does not depend on the triangle orientation
        np.testing.assert_allclose(mesh.boundary_normals, flipped.boundary_normals, atol=1e-15)

    def test_round_trip_file(self):
        mesh = build_unit_square_mesh(3)
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'square.mesh'
            write_mesh(mesh, path)
            self.assertTrue(path.read_text().startswith('mesh2d 1'))
            again = read_mesh(path)
        np.testing.assert_array_equal(mesh.vertices, again.vertices)
        np.testing.assert_array_equal(mesh.triangles, again.triangles)
        self.assertEqual(mesh.label_id('bottom'), again.label_id('bottom'))
        np.testing.assert_array_equal(mesh.boundary_labels, again.boundary_labels)

    def test_bad_file(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / 'bad.mesh'
            path.write_text('not a mesh\n')
            with self.assertRaises(MeshException):
                read_mesh(path)

    def test_locate_points(self):
        mesh = build_unit_square_mesh(4)
        points = np.array([[0.1, 0.2], [0.9, 0.95], [0.5, 0.5]])
        triangles, bary, found = mesh.locate_points(points)
        self.assertTrue(np.all(found))
        reconstructed = np.einsum('nl,nld->nd', bary, mesh.vertices[mesh.triangles[triangles]])
        np.testing.assert_allclose(points, reconstructed, atol=1e-14)
        with self.assertRaises(PointLocationException):
            mesh.locate_points(np.array([[1.5, 0.5]]))
        _, _, found = mesh.locate_points(np.array([[1.5, 0.5]]), strict=False)
        self.assertFalse(found[0])

    def test_rigid_copies(self):
        mesh = build_unit_square_mesh(2)
        moved = mesh.translated([1.0, 2.0]).rotated(0.3)
        self.assertAlmostEqual(mesh.area, moved.area, places=13)
        self.assertAlmostEqual(mesh.h_max, moved.h_max, places=13)
        np.testing.assert_array_equal(mesh.boundary_labels, moved.boundary_labels)
