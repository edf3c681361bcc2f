import tempfile
from pathlib import Path
from unittest import TestCase
from unittest.mock import patch

from r13_mfem.cases.case_types import CaseType
from r13_mfem.cases.check_result import CheckResult
from r13_mfem.cases.diagnostics import DiagnosticsResult
from r13_mfem.exceptions import ConfigException
from r13_mfem.mesh import read_mesh
from r13_mfem.runner import EXIT_CHECKS_FAILED, EXIT_ERROR, EXIT_OK, build_parser, main, resolve_config
from r13_mfem.spaces import ElementPreset

SMALL_CAVITY = """
case = cavity_fourier
kn = 0.1
n = 2
"""


class TestParser(TestCase):
    def test_verbs(self):
        parser = build_parser()
        self.assertEqual('run', parser.parse_args(['run', 'a.cfg']).verb)
        self.assertEqual('diagnose', parser.parse_args(['diagnose']).verb)
        args = parser.parse_args(['mesh', 'annulus', '--h', '0.3'])
        self.assertEqual(('annulus', 0.3), (args.geometry, args.h))
        args = parser.parse_args(['infsup', 'u_p', 'taylor_hood'])
        self.assertEqual(('u_p', 'taylor_hood', 4), (args.pair, args.preset, args.n))
        with self.assertRaises(SystemExit):
            parser.parse_args([])
        with self.assertRaises(SystemExit):
            parser.parse_args(['infsup', 'p_q', 'enriched'])

    def test_resolve_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'cavity.cfg'
            path.write_text(SMALL_CAVITY)
            args = build_parser().parse_args(['run', str(path), '--preset', 'equal_order', '--seed', '3',
                                              '--max-dofs', '100', '--out', tmp])
            config = resolve_config(args)
        self.assertEqual(CaseType.CavityFourier, config.case)
        self.assertEqual(ElementPreset.EqualOrder, config.preset)
        self.assertEqual(3, config.seed)
        self.assertEqual(100, config.max_dofs)
        self.assertEqual(Path(tmp), config.out)

    def test_resolve_defaults(self):
        args = build_parser().parse_args(['diagnose'])
        self.assertEqual(CaseType.ElementDiagnostics, resolve_config(args, CaseType.ElementDiagnostics).case)
        with self.assertRaises(ConfigException):
            resolve_config(build_parser().parse_args(['run']))


class TestMain(TestCase):
    def test_mesh(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'square.mesh'
            self.assertEqual(EXIT_OK, main(['mesh', 'square', '--n', '2', '--output', str(path)]))
            self.assertEqual(8, read_mesh(path).num_triangles)

    def test_infsup(self):
        self.assertEqual(EXIT_OK, main(['infsup', 's_theta', 'enriched', '--n', '2']))

    def test_run(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'cavity.cfg'
            path.write_text(SMALL_CAVITY)
            self.assertEqual(EXIT_OK, main(['run', str(path), '--out', tmp]))
            report = Path(tmp) / 'cavity_fourier' / 'cavity_fourier_report.txt'
            self.assertIn('status: ok', report.read_text())
            self.assertTrue((Path(tmp) / 'cavity_fourier' / 'cavity_fourier_symmetry.csv').is_file())

    def test_run_errors(self):
        with tempfile.TemporaryDirectory() as tmp:
            self.assertEqual(EXIT_ERROR, main(['run', str(Path(tmp) / 'missing.cfg')]))
            path = Path(tmp) / 'bad.cfg'
            path.write_text(SMALL_CAVITY + "kn = -1\n")
            self.assertEqual(EXIT_ERROR, main(['run', str(path), '--out', tmp]))
            path.write_text(SMALL_CAVITY + "colour = blue\n")
            self.assertEqual(EXIT_ERROR, main(['run', str(path), '--out', tmp]))
            self.assertEqual(EXIT_ERROR, main(['run']))

    def test_diagnose_checks_failed(self):
        failing = DiagnosticsResult([CheckResult('duality', 'max |D - I|', 1.0, 1e-12, False)])
        with tempfile.TemporaryDirectory() as tmp:
            with patch('r13_mfem.cases.element_diagnostics.run_diagnostics', return_value=failing):
                self.assertEqual(EXIT_CHECKS_FAILED, main(['diagnose', '--out', tmp]))
            text = (Path(tmp) / 'element_diagnostics' / 'element_diagnostics_report.txt').read_text()
            self.assertIn('FAILED: Diagnostic checks failed: duality/max |D - I|', text)

    def test_diagnose_passes(self):
        passing = DiagnosticsResult([CheckResult('duality', 'max |D - I|', 0.0, 1e-12, True)])
        with tempfile.TemporaryDirectory() as tmp:
            with patch('r13_mfem.cases.element_diagnostics.run_diagnostics', return_value=passing):
                self.assertEqual(EXIT_OK, main(['diagnose', '--out', tmp]))

    def test_run_checks_failed(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'cavity.cfg'
            path.write_text(SMALL_CAVITY)
            with patch('r13_mfem.cases.cavity_fourier.SYMMETRY_TOLERANCE', -1.0):
                self.assertEqual(EXIT_CHECKS_FAILED, main(['run', str(path), '--out', tmp]))
            text = (Path(tmp) / 'cavity_fourier' / 'cavity_fourier_report.txt').read_text()
            self.assertIn('status: failed', text)
            self.assertIn('cavity_fourier/theta asymmetry[kn=0.1, n=2]', text)
            self.assertIn(', FAIL\n', text)
