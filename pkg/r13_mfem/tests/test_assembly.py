import tempfile
from pathlib import Path
from unittest import TestCase

import numpy as np

from r13_mfem.assembly import (
    DofMap, WallData, assemble_boundary_forms, assemble_rhs, assemble_volume_forms, build_system, frame_coefficients
)
from r13_mfem.exceptions import AssemblyException
from r13_mfem.mesh import Mesh, build_unit_square_mesh
from r13_mfem.spaces import FIELD_NAMES, ElementPreset, FEFunction
from r13_mfem.tensorops import DEFAULT_SEED


def constant(*values):
    return lambda p: np.tile(values, (len(p), 1))


def still_wall(kn: float = 1.0) -> WallData:
    return WallData(kn, 1.0, velocity={1: 0.0, 2: 0.0}, temperature={1: 0.0, 2: 0.0})


class TestDofMap(TestCase):
    def test_single_cell_count(self):
        dofmap = DofMap(build_unit_square_mesh(1), ElementPreset.Enriched)
        # 4 vertices, 5 edges, 2 triangles
        dims = [dofmap.spaces[name].dim for name in FIELD_NAMES]
        self.assertEqual([45, 18, 4, 18, 4], dims)
        self.assertEqual(90, dofmap.total)
        self.assertEqual(89, dofmap.multiplier_index)
        self.assertEqual([0, 45, 63, 67, 85], [dofmap.offsets[name] for name in FIELD_NAMES])
        self.assertIn('multiplier: index 89', dofmap.describe())

    def test_presets(self):
        mesh = build_unit_square_mesh(1)
        self.assertEqual(72, DofMap(mesh, ElementPreset.EqualOrder).total)
        self.assertEqual(62, DofMap(mesh, ElementPreset.TaylorHood).total)

    def test_split(self):
        dofmap = DofMap(build_unit_square_mesh(1), ElementPreset.Enriched)
        parts = dofmap.split(np.arange(dofmap.total, dtype=float))
        self.assertEqual(list(FIELD_NAMES), list(parts))
        self.assertEqual(45.0, parts['s'][0])
        self.assertEqual(88.0, parts['theta'][-1])


class TestWallData(TestCase):
    def test_values(self):
        wall = WallData(0.1, velocity={1: 2.0}, temperature={1: lambda p: p[:, 0]})
        points = np.array([[[0.25, 0.0], [0.75, 0.0]]])
        np.testing.assert_array_equal([[2.0, 2.0]], wall.values('velocity', 1, points))
        np.testing.assert_array_equal([[0.25, 0.75]], wall.values('temperature', 1, points))
        self.assertIn('Kn = 0.1', wall.describe())
        with self.assertRaises(AssemblyException):
            wall.values('velocity', 2, points)

    def test_bad_parameters(self):
        with self.assertRaises(AssemblyException):
            WallData(0.0)
        with self.assertRaises(AssemblyException):
            WallData(1.0, chi=-1.0)


class TestVolumeForms(TestCase):
    def setUp(self):
        self.dofmap = DofMap(build_unit_square_mesh(2), ElementPreset.Enriched)
        self.forms = assemble_volume_forms(self.dofmap, 1.0)
        self.spaces = self.dofmap.spaces

    def test_a_mass_term(self):
        s = self.spaces['s'].interpolate(constant(1.0, 0.0))
        self.assertAlmostEqual(4.0 / 15.0, float(s @ self.forms['a'] @ s), places=12)
        forms = assemble_volume_forms(self.dofmap, 0.5)
        self.assertAlmostEqual(8.0 / 15.0, float(s @ forms['a'] @ s), places=12)

    def test_g_and_b(self):
        p = self.spaces['p'].interpolate(lambda q: q[:, 0])
        v = self.spaces['u'].interpolate(constant(1.0, 0.0))
        self.assertAlmostEqual(1.0, float(v @ self.forms['g'] @ p), places=12)
        theta = self.spaces['theta'].interpolate(lambda q: np.ones(len(q)))
        r = self.spaces['s'].interpolate(lambda q: np.stack([q[:, 0], np.zeros(len(q))], axis=1))
        self.assertAlmostEqual(1.0, float(r @ self.forms['b'] @ theta), places=12)

    def test_c_volume(self):
        sigma = self.spaces['sigma'].interpolate(constant(1.0, 0.0, 1.0))
        r = self.spaces['s'].interpolate(lambda q: np.stack([q[:, 0], q[:, 1]], axis=1))
        # (2/5) (I, grad r) = (2/5) int div r = 4/5
        self.assertAlmostEqual(0.8, float(r @ self.forms['c'] @ sigma), places=12)

    def test_d_linear_field(self):
        # sigma = diag(x, 0): only the mass term and the stf gradient of the embedded field contribute
        sigma = self.spaces['sigma'].interpolate(lambda q: np.stack([q[:, 0], 0 * q[:, 0], 0 * q[:, 0]], axis=1))
        kn_one = float(sigma @ self.forms['d'] @ sigma)
        kn_half = float(sigma @ assemble_volume_forms(self.dofmap, 0.5)['d'] @ sigma)
        # embedded mass sigma~ : sigma~ = 2 x^2 integrates to 2/3
        mass = 2.0 / 3.0
        gradient = kn_one - mass / 2.0
        self.assertGreater(gradient, 0.0)
        self.assertAlmostEqual(0.5 * gradient + mass, kn_half, places=12)

    def test_symmetric_blocks(self):
        for name in ('a', 'd'):
            matrix = self.forms[name]
            scale = abs(matrix).max()
            self.assertLessEqual(abs(matrix - matrix.T).max(), 1e-12 * scale)

    def test_bad_kn(self):
        with self.assertRaises(AssemblyException):
            assemble_volume_forms(self.dofmap, -1.0)

    def test_discrete_adjoint(self):
        rng = np.random.default_rng(DEFAULT_SEED)
        sig_space, u_space = self.spaces['sigma'], self.spaces['u']
        sigma = rng.standard_normal(sig_space.dim)
        sigma[sig_space.boundary_dofs()] = 0.0
        u = rng.standard_normal(u_space.dim)
        divergence_pairing = float(u @ self.forms['e'] @ sigma)
        values = FEFunction(sig_space, sigma).cell_values()
        gradients = FEFunction(u_space, u).cell_gradients()
        _, weights = sig_space.quadrature_points()
        strain_pairing = np.einsum('tq,tq->', weights, values[..., 0] * gradients[..., 0, 0]
                                   + values[..., 1] * (gradients[..., 0, 1] + gradients[..., 1, 0])
                                   + values[..., 2] * gradients[..., 1, 1])
        scale = abs(divergence_pairing) + abs(float(strain_pairing))
        self.assertLessEqual(abs(divergence_pairing + float(strain_pairing)), 1e-10 * scale)


class TestBoundaryForms(TestCase):
    def setUp(self):
        self.dofmap = DofMap(build_unit_square_mesh(2), ElementPreset.Enriched)
        self.spaces = self.dofmap.spaces

    def test_a_boundary(self):
        forms = assemble_boundary_forms(self.dofmap, 1.0)
        s = self.spaces['s'].interpolate(constant(1.0, 0.0))
        self.assertAlmostEqual(49.0 / 25.0, float(s @ forms['a'] @ s), places=12)
        total = assemble_volume_forms(self.dofmap, 1.0)['a'] + forms['a']
        self.assertAlmostEqual(167.0 / 75.0, float(s @ total @ s), places=12)

    def test_d_boundary(self):
        forms = assemble_boundary_forms(self.dofmap, 1.0)
        sigma = self.spaces['sigma'].interpolate(constant(1.0, 0.0, 1.0))
        self.assertAlmostEqual(13.5, float(sigma @ forms['d'] @ sigma), places=12)

    def test_c_boundary(self):
        forms = assemble_boundary_forms(self.dofmap, 1.0)
        sigma = self.spaces['sigma'].interpolate(constant(1.0, 0.0, 1.0))
        r = self.spaces['s'].interpolate(lambda q: np.stack([q[:, 0], q[:, 1]], axis=1))
        # sigma_nn = 1, sigma_nt = 0 and r_n integrates to 2 over the boundary
        self.assertAlmostEqual(-0.3, float(r @ forms['c'] @ sigma), places=12)

    def test_tangent_orientation(self):
        rng = np.random.default_rng(DEFAULT_SEED)
        angles = rng.uniform(0.0, 2.0 * np.pi, 10)
        normals = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        tangents = np.stack([-normals[:, 1], normals[:, 0]], axis=1)
        nn, tt, nt = frame_coefficients(normals, tangents)
        flipped_nn, flipped_tt, flipped_nt = frame_coefficients(normals, -tangents)
        np.testing.assert_allclose(nn, flipped_nn)
        np.testing.assert_allclose(tt, flipped_tt)
        np.testing.assert_allclose(-nt, flipped_nt)
        np.testing.assert_allclose(1.0, nn[:, 0] + nn[:, 2], atol=1e-14)
        np.testing.assert_allclose(1.0, tt[:, 0] + tt[:, 2], atol=1e-14)

    def test_unlabeled_edges(self):
        labeled = build_unit_square_mesh(1)
        dofmap = DofMap(Mesh(labeled.vertices, labeled.triangles), ElementPreset.Enriched)
        with self.assertRaises(AssemblyException):
            assemble_boundary_forms(dofmap, 1.0)
        with self.assertRaises(AssemblyException):
            assemble_rhs(dofmap, still_wall())
        with self.assertRaises(AssemblyException):
            assemble_boundary_forms(self.dofmap, 0.0)


class TestRhs(TestCase):
    def setUp(self):
        self.dofmap = DofMap(build_unit_square_mesh(2), ElementPreset.Enriched)
        self.spaces = self.dofmap.spaces

    def test_zero_data(self):
        l1, l2 = assemble_rhs(self.dofmap, still_wall())
        np.testing.assert_array_equal(0.0, l1)
        np.testing.assert_array_equal(0.0, l2)

    def test_uniform_temperature_cancels(self):
        wall = WallData(1.0, velocity={1: 0.0, 2: 0.0}, temperature={1: 1.0, 2: 1.0})
        l1, _ = assemble_rhs(self.dofmap, wall)
        r = self.spaces['s'].interpolate(constant(1.0, 0.0))
        self.assertAlmostEqual(0.0, float(l1 @ r), places=13)

    def test_heated_bottom(self):
        wall = WallData(1.0, velocity={1: 0.0, 2: 0.0}, temperature={1: 1.0, 2: 0.0})
        l1, l2 = assemble_rhs(self.dofmap, wall)
        r = self.spaces['s'].interpolate(constant(0.0, 1.0))
        self.assertAlmostEqual(1.0, float(l1 @ r), places=13)
        np.testing.assert_array_equal(0.0, l2)

    def test_moving_wall(self):
        wall = WallData(1.0, velocity={1: 1.0, 2: 0.0}, temperature={1: 0.0, 2: 0.0})
        _, l2 = assemble_rhs(self.dofmap, wall)
        # tau = sym(e1 e2): on the bottom n = -e2, t = e1, so tau_nt = -1
        tau = self.spaces['sigma'].interpolate(constant(0.0, 1.0, 0.0))
        self.assertAlmostEqual(1.0, float(l2 @ tau), places=13)

    def test_missing_label(self):
        with self.assertRaises(AssemblyException):
            assemble_rhs(self.dofmap, WallData(1.0, velocity={1: 0.0}, temperature={1: 0.0}))


class TestBlockSystem(TestCase):
    def setUp(self):
        self.system = build_system(build_unit_square_mesh(1), ElementPreset.Enriched, still_wall())

    def test_size(self):
        self.assertEqual(90, self.system.size)
        self.assertEqual((90, 90), self.system.matrix.shape)
        np.testing.assert_array_equal(0.0, self.system.rhs)
        self.assertEqual(1.0, self.system.kn)
        self.assertEqual(ElementPreset.Enriched, self.system.preset)

    def test_a_block_nonnegative(self):
        a_block = self.system.a_block()
        rng = np.random.default_rng(DEFAULT_SEED)
        for _ in range(100):
            s = rng.standard_normal(a_block.shape[0])
            self.assertGreaterEqual(float(s @ a_block @ s), -1e-10 * float(s @ s))

    def test_skew_pattern(self):
        a_block = self.system.a_block()
        skew = (a_block - a_block.T).tocsr()
        sigma = self.system.dofmap.field_slice('sigma')
        s = self.system.dofmap.field_slice('s')
        scale = abs(a_block).max()
        self.assertLessEqual(abs(skew[sigma, sigma]).max(), 1e-12 * scale)
        self.assertLessEqual(abs(skew[s, s]).max(), 1e-12 * scale)
        self.assertGreater(abs(skew[s, sigma]).max(), 0.0)

    def test_constraint_block_zero(self):
        block = self.system.matrix[self.system.constraint_slice(), self.system.constraint_slice()]
        self.assertEqual(0, block.count_nonzero())
        self.assertEqual(self.system.b_block().shape, (22, 67))

    def test_mean_row(self):
        row = self.system.matrix[self.system.size - 1].toarray().ravel()
        p = self.system.dofmap.field_slice('p')
        self.assertAlmostEqual(1.0, float(row[p].sum()), places=12)
        self.assertEqual(0, np.count_nonzero(np.delete(row, np.arange(p.start, p.stop))))

    def test_functions(self):
        functions = self.system.functions(np.ones(self.system.size))
        self.assertEqual(list(FIELD_NAMES), list(functions))
        self.assertEqual(3, functions['sigma'].components)

    def test_max_dofs(self):
        with self.assertRaises(AssemblyException):
            build_system(build_unit_square_mesh(1), ElementPreset.Enriched, still_wall(), max_dofs=50)

    def test_dump(self):
        with tempfile.TemporaryDirectory() as folder:
            sidecar = self.system.dump(Path(folder) / 'system.txt')
            lines = (Path(folder) / 'system.txt').read_text().splitlines()
            self.assertEqual(self.system.matrix.nnz, len(lines))
            meta = sidecar.read_text().splitlines()
            self.assertEqual('size 90', meta[0])
            self.assertIn('sigma 0 45', meta)
            self.assertIn('multiplier 89 1', meta)
