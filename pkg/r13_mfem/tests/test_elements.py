from math import factorial
from unittest import TestCase

import numpy as np

from r13_mfem.elements import (
    REFERENCE_VERTICES, ScalarElement, TriangleGeometry, dof_functionals, edge_barycentric, edge_quadrature,
    eval_enriched_basis, eval_lagrange_basis, lagrange_nodes, local_tensor_basis, quadrature, sym_grad_rank
)
from r13_mfem.exceptions import DegenerateElementException, QuadratureException, R13Exception
from r13_mfem.tensorops import DEFAULT_SEED


def random_triangle(rng) -> np.ndarray:
    while True:
        vertices = rng.uniform(-1.0, 1.0, (3, 2))
        d1, d2 = vertices[1] - vertices[0], vertices[2] - vertices[0]
        area = 0.5 * (d1[0] * d2[1] - d1[1] * d2[0])
        if area < 0:
            vertices = vertices[[0, 2, 1]]
        if abs(area) > 0.2:
            return vertices


class TestQuadrature(TestCase):
    def test_weights(self):
        for degree in range(13):
            rule = quadrature(degree)
            self.assertAlmostEqual(1.0, float(np.sum(rule.weights)), places=14)
            np.testing.assert_allclose(1.0, rule.points.sum(axis=1), atol=1e-15)
            self.assertTrue(np.all(rule.points > 0.0))

    def test_monomials_on_reference(self):
        for degree in (2, 6, 10, 12):
            rule = quadrature(degree)
            x, y = rule.points[:, 1], rule.points[:, 2]
            for a in range(degree + 1):
                for b in range(degree + 1 - a):
                    exact = factorial(a) * factorial(b) / factorial(a + b + 2)
                    # weights sum to one, the reference area is one half
                    self.assertAlmostEqual(exact, 0.5 * float(rule.weights @ (x ** a * y ** b)), places=14)

    def test_edge_rule(self):
        rule = edge_quadrature(6)
        for power in range(7):
            self.assertAlmostEqual(1.0 / (power + 1), float(rule.weights @ rule.points ** power), places=14)

    def test_unsupported_degree(self):
        with self.assertRaises(QuadratureException):
            quadrature(13)
        with self.assertRaises(QuadratureException):
            edge_quadrature(-1)

    def test_edge_barycentric(self):
        np.testing.assert_array_equal([[0.0, 1.0, 0.0], [0.0, 0.5, 0.5], [0.0, 0.0, 1.0]],
                                      edge_barycentric(0, np.array([0.0, 0.5, 1.0])))
        np.testing.assert_array_equal([0.75, 0.0, 0.25], edge_barycentric(1, 0.75))


class TestGeometry(TestCase):
    def test_reference(self):
        g = TriangleGeometry(REFERENCE_VERTICES)
        self.assertAlmostEqual(0.5, g.area)
        np.testing.assert_allclose([np.sqrt(2.0), 1.0, 1.0], g.edge_lengths)
        np.testing.assert_allclose([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]], g.bary_gradients)
        np.testing.assert_allclose([[0.2, 0.3, 0.5]], g.to_barycentric(g.to_physical([0.2, 0.3, 0.5])))

    def test_clockwise_and_degenerate(self):
        with self.assertRaises(DegenerateElementException):
            TriangleGeometry([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        with self.assertRaises(DegenerateElementException):
            TriangleGeometry([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])


class TestEnrichedBasis(TestCase):
    def test_duality_on_reference(self):
        np.testing.assert_allclose(np.eye(9), dof_functionals(REFERENCE_VERTICES).duality_matrix(), atol=1e-12)

    def test_duality_on_random_triangles(self):
        rng = np.random.default_rng(DEFAULT_SEED)
        for _ in range(20):
            vertices = random_triangle(rng)
            np.testing.assert_allclose(np.eye(9), dof_functionals(vertices).duality_matrix(), atol=1e-12)

    def test_tensor_duality(self):
        vertices = random_triangle(np.random.default_rng(DEFAULT_SEED))
        basis = local_tensor_basis(vertices)
        self.assertEqual(27, basis.dimension)
        np.testing.assert_allclose(np.eye(27), basis.duality_matrix(), atol=1e-12)

    def test_constant_reproduction(self):
        vertices = random_triangle(np.random.default_rng(DEFAULT_SEED + 1))
        g = TriangleGeometry(vertices)
        bary = quadrature(4).points
        values, gradients = eval_enriched_basis(bary, vertices)
        weights = np.concatenate([np.ones(3), g.edge_lengths, np.full(3, g.area / 3.0)])
        np.testing.assert_allclose(1.0, values @ weights, atol=1e-12)
        np.testing.assert_allclose(0.0, np.einsum('nad,a->nd', gradients, weights), atol=1e-10)

    def test_vertex_values(self):
        values, _ = eval_enriched_basis(np.eye(3))
        np.testing.assert_allclose(np.eye(3), values[:, :3], atol=1e-15)
        np.testing.assert_allclose(0.0, values[:, 3:], atol=1e-15)

    def test_single_point_shape(self):
        values, gradients = eval_enriched_basis([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])
        self.assertEqual((1, 9), values.shape)
        self.assertEqual((1, 9, 2), gradients.shape)

    def test_rejects_outside_points(self):
        with self.assertRaises(R13Exception):
            eval_enriched_basis([1.5, -0.5, 0.0])


class TestLagrangeBasis(TestCase):
    def test_nodal(self):
        for degree, element in ((1, ScalarElement.P1), (2, ScalarElement.P2)):
            values, _ = eval_lagrange_basis(degree, lagrange_nodes(element))
            np.testing.assert_allclose(np.eye(element.num_local), values, atol=1e-15)

    def test_partition_of_unity(self):
        vertices = random_triangle(np.random.default_rng(DEFAULT_SEED))
        for degree in (1, 2):
            values, gradients = eval_lagrange_basis(degree, quadrature(4).points, vertices)
            np.testing.assert_allclose(1.0, values.sum(axis=1), atol=1e-14)
            np.testing.assert_allclose(0.0, gradients.sum(axis=1), atol=1e-12)

    def test_bad_degree(self):
        with self.assertRaises(R13Exception):
            eval_lagrange_basis(3, np.eye(3))
        with self.assertRaises(R13Exception):
            lagrange_nodes(ScalarElement.P2B)

    def test_element_properties(self):
        self.assertEqual([3, 6, 9], [e.num_local for e in ScalarElement])
        self.assertFalse(ScalarElement.P1.has_edge_dofs)
        self.assertTrue(ScalarElement.P2.has_edge_dofs)
        self.assertTrue(ScalarElement.P2B.has_interior_dofs)


class TestSymGradRank(TestCase):
    def test_full_rank(self):
        self.assertEqual(9, sym_grad_rank())
        rng = np.random.default_rng(DEFAULT_SEED)
        for _ in range(5):
            self.assertEqual(9, sym_grad_rank(random_triangle(rng)))
