from itertools import permutations
from unittest import TestCase

import numpy as np

from r13_mfem.exceptions import R13Exception
from r13_mfem.tensorops import (
    DEFAULT_SEED, KernelField, KernelType, SymTensor2, as_components, divergence_right_inverse, embed_2d,
    embedded_gradient, inplane_stf_gram, kernel_basis, stf3_matrix, stf3_project, stf_project,
    symbol_injectivity_check, symbol_min_singular_value, sym_project
)


class TestProjections(TestCase):
    def test_sym_project(self):
        np.testing.assert_array_equal(np.zeros((2, 2)), sym_project([[0.0, 1.0], [-1.0, 0.0]]))
        np.testing.assert_array_equal(np.eye(2), sym_project(np.eye(2)))
        np.testing.assert_allclose([[1.0, 2.5], [2.5, 4.0]], sym_project([[1.0, 2.0], [3.0, 4.0]]), atol=1e-15)

    def test_stf_project(self):
        np.testing.assert_allclose(np.zeros((2, 2)), stf_project(np.eye(2)), atol=1e-15)
        np.testing.assert_allclose([[-1.5, 2.5], [2.5, 1.5]], stf_project([[1.0, 2.0], [3.0, 4.0]]), atol=1e-15)
        m = np.random.default_rng(DEFAULT_SEED).standard_normal((3, 3))
        out = stf_project(m)
        self.assertAlmostEqual(0.0, np.trace(out), places=14)
        np.testing.assert_allclose(out, out.T, atol=1e-15)
        with self.assertRaises(R13Exception):
            stf_project(np.eye(4))

    def test_complex_counterexample(self):
        v = np.array([1j, 1.0])
        xi = np.array([1j, -1.0])
        np.testing.assert_allclose(np.zeros((2, 2)), stf_project(np.outer(v, xi)), atol=1e-15)

    def test_embed_2d(self):
        expected = [[1.0, 2.0, 0.0], [2.0, 3.0, 0.0], [0.0, 0.0, -4.0]]
        np.testing.assert_array_equal(expected, embed_2d(np.array([[1.0, 2.0], [2.0, 3.0]])))
        np.testing.assert_array_equal(expected, embed_2d(SymTensor2(1.0, 2.0, 3.0)))
        np.testing.assert_array_equal(np.zeros((3, 3)), embed_2d(np.zeros(3)))
        np.testing.assert_array_equal(np.diag([1.0, -1.0, 0.0]), embed_2d([[1.0, 0.0], [0.0, -1.0]]))
        np.testing.assert_array_equal([1.0, 2.0, 3.0], as_components(SymTensor2(1.0, 2.0, 3.0).as_matrix()))


class TestStf3(TestCase):
    def test_zero(self):
        np.testing.assert_array_equal(np.zeros((3, 3, 3)), stf3_project(np.zeros((3, 3, 3))))

    def test_e111(self):
        m = np.zeros((3, 3, 3))
        m[0, 0, 0] = 1.0
        out = stf3_project(m)
        self.assertAlmostEqual(0.4, out[0, 0, 0], places=15)
        for j in (1, 2):
            for index in set(permutations((0, j, j))):
                self.assertAlmostEqual(-0.2, out[index], places=15)
        mask = np.zeros((3, 3, 3), dtype=bool)
        mask[0, 0, 0] = True
        for j in (1, 2):
            for index in set(permutations((0, j, j))):
                mask[index] = True
        np.testing.assert_array_equal(0.0, out[~mask])

    def test_properties(self):
        rng = np.random.default_rng(DEFAULT_SEED)
        m = rng.standard_normal((100, 3, 3, 3))
        n = rng.standard_normal((100, 3, 3, 3))
        out = stf3_project(m)
        np.testing.assert_allclose(out, stf3_project(out), atol=1e-14)
        for perm in permutations((1, 2, 3)):
            np.testing.assert_allclose(out, np.transpose(out, (0,) + perm), atol=1e-14)
        for pattern in ('nill->ni', 'nlil->ni', 'nlli->ni'):
            np.testing.assert_allclose(0.0, np.einsum(pattern, out), atol=1e-14)
        np.testing.assert_allclose(np.einsum('nijk,nijk->n', out, n), np.einsum('nijk,nijk->n', m, stf3_project(n)),
                                   atol=1e-13)

    def test_matrix_form(self):
        m = np.random.default_rng(DEFAULT_SEED).standard_normal((3, 3, 3))
        np.testing.assert_allclose(stf3_project(m).ravel(), stf3_matrix() @ m.ravel(), atol=1e-14)

    def test_inplane_gram(self):
        gram = inplane_stf_gram().reshape(6, 6)
        np.testing.assert_allclose(gram, gram.T, atol=1e-14)
        g = np.random.default_rng(DEFAULT_SEED).standard_normal((3, 2))
        direct = stf3_project(embedded_gradient(g))
        self.assertAlmostEqual(float(np.sum(direct * direct)), float(g.ravel() @ gram @ g.ravel()), places=12)


class TestKernels(TestCase):
    def test_basis_sizes(self):
        self.assertEqual(3, len(kernel_basis(2)))
        tags = [v.tag for v in kernel_basis(3)]
        self.assertEqual(10, len(tags))
        self.assertEqual(3, tags.count(KernelType.Translation))
        self.assertEqual(3, tags.count(KernelType.Rotation))
        self.assertEqual(1, tags.count(KernelType.Scaling))
        self.assertEqual(3, tags.count(KernelType.SpecialConformal))
        with self.assertRaises(R13Exception):
            kernel_basis(4)

    def test_2d_rigid_motions(self):
        points = np.random.default_rng(DEFAULT_SEED).uniform(-1.0, 1.0, (20, 2))
        translation_x, translation_y, rotation = kernel_basis(2)
        np.testing.assert_allclose(np.tile([1.0, 0.0], (20, 1)), translation_x.evaluate(points), atol=1e-15)
        np.testing.assert_allclose(np.tile([0.0, 1.0], (20, 1)), translation_y.evaluate(points), atol=1e-15)
        np.testing.assert_allclose(np.stack([points[:, 1], -points[:, 0]], axis=1), rotation.evaluate(points),
                                   atol=1e-15)
        for v in kernel_basis(2):
            np.testing.assert_allclose(0.0, v.strain(points), atol=1e-14)

    def test_3d_conformal_killing(self):
        points = np.random.default_rng(DEFAULT_SEED).uniform(-1.0, 1.0, (20, 3))
        for v in kernel_basis(3):
            np.testing.assert_allclose(0.0, v.strain(points), atol=1e-13)

    def test_linear_independence(self):
        points = np.random.default_rng(DEFAULT_SEED).uniform(-1.0, 1.0, (30, 3))
        samples = np.stack([v.evaluate(points).ravel() for v in kernel_basis(3)], axis=1)
        self.assertEqual(10, np.linalg.matrix_rank(samples))

    def test_bad_payload(self):
        with self.assertRaises(R13Exception):
            KernelField(KernelType.Rotation, 2, np.eye(2))
        with self.assertRaises(R13Exception):
            KernelField(KernelType.Translation, 3, [1.0, 0.0])


class TestRightInverses(TestCase):
    def test_2d_rotation(self):
        rotation = kernel_basis(2)[2]
        sigma = divergence_right_inverse(rotation)
        points = np.random.default_rng(DEFAULT_SEED).uniform(-1.0, 1.0, (50, 2))
        xy = points[:, 0] * points[:, 1]
        expected = np.zeros((50, 2, 2))
        expected[:, 0, 0] = xy
        expected[:, 1, 1] = -xy
        np.testing.assert_allclose(expected, sigma.evaluate(points), atol=1e-14)
        np.testing.assert_allclose(rotation.evaluate(points), sigma.divergence(points), atol=1e-12)

    def test_3d_translation(self):
        v = KernelField(KernelType.Translation, 3, [1.0, 0.0, 0.0])
        sigma = divergence_right_inverse(v)
        points = np.random.default_rng(DEFAULT_SEED).uniform(-1.0, 1.0, (50, 3))
        e1 = np.array([1.0, 0.0, 0.0])
        expected = np.stack([(3.0 * (np.outer(e1, x) + np.outer(x, e1)) - 2.0 * x[0] * np.eye(3)) / 10.0
                             for x in points])
        np.testing.assert_allclose(expected, sigma.evaluate(points), atol=1e-14)
        np.testing.assert_allclose(np.tile(e1, (50, 1)), sigma.divergence(points), atol=1e-12)

    def test_special_conformal(self):
        v = KernelField(KernelType.SpecialConformal, 3, [0.0, 0.0, 1.0])
        sigma = divergence_right_inverse(v)
        points = np.random.default_rng(DEFAULT_SEED).uniform(-1.0, 1.0, (50, 3))
        expected = 2.0 * points[:, 2:3] * points - np.sum(points ** 2, axis=1)[:, None] * np.array([0.0, 0.0, 1.0])
        np.testing.assert_allclose(expected, sigma.divergence(points), atol=1e-12)

    def test_all_kernel_types(self):
        points = np.random.default_rng(DEFAULT_SEED).uniform(-1.0, 1.0, (50, 3))
        for v in kernel_basis(3):
            sigma = divergence_right_inverse(v)
            values = sigma.evaluate(points)
            np.testing.assert_allclose(v.evaluate(points), sigma.divergence(points), atol=1e-12)
            np.testing.assert_allclose(values, np.swapaxes(values, 1, 2), atol=1e-14)
            np.testing.assert_allclose(0.0, np.einsum('nii->n', values), atol=1e-13)

    def test_rejects_non_kernel(self):
        with self.assertRaises(R13Exception):
            divergence_right_inverse(KernelField(KernelType.Scaling, 2, 1.0))


class TestSymbol(TestCase):
    def test_2d_counterexample(self):
        value, direction = symbol_min_singular_value([1j, -1.0])
        self.assertLess(value, 1e-12)
        self.assertAlmostEqual(1.0, abs(np.vdot(np.array([1j, 1.0]) / np.sqrt(2.0), direction)), places=12)
        report = symbol_injectivity_check(2, 5)
        self.assertTrue(report.counterexample_found)

    def test_3d_injective(self):
        report = symbol_injectivity_check(3, 100)
        self.assertEqual(100, len(report.min_singular_values))
        self.assertFalse(report.counterexample_found)
        self.assertGreater(min(report.min_singular_values), 0.05)
        value, _ = symbol_min_singular_value([1.0, 0.0, 0.0])
        self.assertGreater(value, 0.1)

    def test_seed_changes_samples(self):
        first = symbol_injectivity_check(3, 10, seed=1).min_singular_values
        second = symbol_injectivity_check(3, 10, seed=2).min_singular_values
        self.assertNotEqual(first, second)

    def test_rejects_bad_arguments(self):
        with self.assertRaises(R13Exception):
            symbol_injectivity_check(4, 10)
        with self.assertRaises(R13Exception):
            symbol_injectivity_check(3, 0)
