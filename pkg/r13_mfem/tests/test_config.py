import tempfile
from pathlib import Path
from unittest import TestCase

from r13_mfem.cases.case_types import CaseType
from r13_mfem.cases.config import CaseConfig
from r13_mfem.exceptions import ConfigException
from r13_mfem.spaces import ElementPreset


class TestCaseConfig(TestCase):
    def test_defaults_pass_checks(self):
        for case in CaseType:
            config = CaseConfig.defaults_for(case)
            if case == CaseType.InvalidType:
                self.assertFalse(config.check_ok())
                self.assertIn("No valid case selected", config.check_ok_messages)
            else:
                self.assertTrue(config.check_ok(), config.check_ok_messages)

    def test_parse_overrides_defaults(self):
        text = """
        # a comment line
        case = annulus_couette
        kn = 0.1            # trailing comment
        h = 0.4, 0.2
        wall_velocity = inner:1.0, outer:0.5
        preset = taylor_hood
        export_vtk = yes
        max_dofs = none
        """
        config = CaseConfig.parse(text)
        self.assertEqual(CaseType.AnnulusCouette, config.case)
        self.assertEqual([0.1], config.kn)
        self.assertEqual([0.4, 0.2], config.h)
        self.assertEqual({'inner': 1.0, 'outer': 0.5}, config.wall_velocity)
        self.assertEqual({'inner': 1.0, 'outer': 1.0}, config.wall_temperature)
        self.assertEqual(ElementPreset.TaylorHood, config.preset)
        self.assertEqual([ElementPreset.TaylorHood], config.run_presets())
        self.assertTrue(config.export_vtk)
        self.assertIsNone(config.max_dofs)
        self.assertTrue(config.check_ok())

    def test_describe_round_trip(self):
        config = CaseConfig.defaults_for(CaseType.EdgeFlow)
        config.kn = [0.001, 0.1]
        config.max_dofs = 5000
        again = CaseConfig.parse(config.describe())
        self.assertEqual(config.describe(), again.describe())
        self.assertEqual(config.kn, again.kn)
        self.assertEqual(config.presets, again.presets)
        self.assertEqual(config.slice_lines, again.slice_lines)

    def test_syntax_errors(self):
        with self.assertRaises(ConfigException) as context:
            CaseConfig.parse("case = cavity_fourier\nnot a pair\ncolour = blue\n")
        self.assertEqual(2, len(context.exception.messages))
        self.assertIn("line 2", context.exception.messages[0])
        self.assertIn("unknown key 'colour'", context.exception.messages[1])

    def test_value_errors(self):
        with self.assertRaises(ConfigException) as context:
            CaseConfig.parse("case = cavity_fourier\nkn = fast\npreset = p2p2\nwall_velocity = bottom\n"
                             "export_vtk = maybe\n")
        self.assertEqual(4, len(context.exception.messages))
        with self.assertRaises(ConfigException):
            CaseConfig.parse("case = wind_tunnel\n")

    def test_check_failures(self):
        config = CaseConfig.parse("case = annulus_couette\nkn = -1\nh = 0.2\nchi = 0\npairs = p_q\n"
                                  "slice_lines = z=3\nslice_count = 1\npattern = random\nmax_dofs = 0\n")
        config.wall_velocity = {}
        self.assertFalse(config.check_ok())
        messages = '\n'.join(config.check_ok_messages)
        for fragment in ('Knudsen numbers must be positive', 'Accommodation factor', "inf-sup pair 'p_q'",
                         "Slice line 'z=3'", 'Slice count', "pattern 'random'", 'DoF cap',
                         "Wall data missing for boundary 'inner'", 'at least two mesh sizes'):
            self.assertIn(fragment, messages)

    def test_square_subdivisions(self):
        config = CaseConfig.defaults_for(CaseType.CavityFourier)
        config.h = [0.5, 0.3, 0.02]
        self.assertEqual([2, 4, 50], config.square_subdivisions())
        config.pattern = 'diagonal'
        self.assertEqual([2, 4, 50], config.square_subdivisions())
        config.h = [0.3]
        self.assertEqual([4], config.square_subdivisions())
        config.h = [0.34]
        self.assertEqual([3], config.square_subdivisions())
        config.n = [5, 7]
        self.assertEqual([5, 7], config.square_subdivisions())

    def test_read(self):
        with tempfile.TemporaryDirectory() as folder:
            path = Path(folder) / 'run.cfg'
            path.write_text("case = infsup_study\nn = 2, 4\npresets = enriched\n")
            config = CaseConfig.read(path)
            self.assertEqual([2, 4], config.n)
            self.assertEqual([ElementPreset.Enriched], config.run_presets())
            with self.assertRaises(ConfigException):
                CaseConfig.read(Path(folder) / 'missing.cfg')

    def test_shipped_examples(self):
        folder = Path(__file__).resolve().parents[1] / 'examples'
        files = sorted(folder.glob('*.cfg'))
        self.assertEqual(6, len(files))
        for path in files:
            config = CaseConfig.read(path)
            self.assertTrue(config.check_ok(), f"{path.name}: {config.check_ok_messages}")
