import os
from unittest import TestCase, skipUnless

from r13_mfem.cases.case_types import CaseType
from r13_mfem.cases.check_result import CheckResult
from r13_mfem.cases.config import CaseConfig
from r13_mfem.cases.diagnostics import IDEMPOTENCE_TOLERANCE, SUITES, DiagnosticsResult, run_diagnostics
from r13_mfem.cases.element_diagnostics import ElementDiagnostics
from r13_mfem.exceptions import R13Exception
from r13_mfem.tests.cases.case_test_helper import CaseTestHelper

LONG_TESTS = bool(os.environ.get('R13_LONG_TESTS'))
FAST_SUITES = ['duality', 'stf3', 'right_inverse', 'kernel', 'symbol', 'projection']


class TestDiagnosticsResult(TestCase):
    def test_outcome(self):
        result = DiagnosticsResult()
        result.add(CheckResult('one', 'x', 0.0, 1.0, True))
        result.add(CheckResult('two', 'y', 2.0, 1.0, False, expected_fail=True))
        self.assertTrue(result.passed)
        self.assertEqual(['one', 'two'], result.suites())
        result.add(CheckResult('two', 'z', 2.0, 1.0, False))
        self.assertFalse(result.passed)
        self.assertEqual(['z'], [r.check for r in result.failures()])


class TestRunDiagnostics(TestCase):
    def test_fast_suites(self):
        calls = []
        config = CaseConfig.defaults_for(CaseType.ElementDiagnostics)
        result = run_diagnostics(config, FAST_SUITES, lambda: calls.append(1))
        self.assertEqual(len(FAST_SUITES), len(calls))
        self.assertEqual(FAST_SUITES, result.suites())
        self.assertEqual([], [f"{r.suite}/{r.check}: {r.measured}" for r in result.failures()])
        self.assertTrue(result.passed)

    def test_seed_reproducible(self):
        config = CaseConfig.defaults_for(CaseType.ElementDiagnostics)
        first = [r.measured for r in run_diagnostics(config, ['duality', 'stf3']).results]
        second = [r.measured for r in run_diagnostics(config, ['duality', 'stf3']).results]
        self.assertEqual(first, second)

    def test_unknown_suite(self):
        with self.assertRaises(R13Exception):
            run_diagnostics(CaseConfig.defaults_for(CaseType.ElementDiagnostics), ['duality', 'vibes'])

    @skipUnless(LONG_TESTS, "set R13_LONG_TESTS to run the interpolation suite")
    def test_interpolation_idempotence_tolerance(self):
        result = run_diagnostics(CaseConfig.defaults_for(CaseType.ElementDiagnostics), ['interpolation'])
        check = [r for r in result.results if r.check == 'idempotence on zero-trace members'][0]
        self.assertEqual(IDEMPOTENCE_TOLERANCE, check.threshold)
        self.assertEqual(1e-12, check.threshold)
        self.assertEqual('pass', check.status)


class TestElementDiagnostics(CaseTestHelper):
    def test_interface(self):
        self.check_interface(ElementDiagnostics(), CaseType.ElementDiagnostics)
        config = CaseConfig.defaults_for(CaseType.ElementDiagnostics)
        self.assertEqual(len(SUITES), ElementDiagnostics().get_number_of_progress_steps(config))

    def test_bad_config(self):
        self.check_bad_config(ElementDiagnostics())

    @skipUnless(LONG_TESTS, "set R13_LONG_TESTS to run every diagnostic suite")
    def test_all_suites(self):
        report = self.run_case(ElementDiagnostics(), CaseConfig.defaults_for(CaseType.ElementDiagnostics))
        self.assertTrue(report.success, report.describe())
        statuses = self.table_column(report, 'diagnostics', 'status')
        self.assertNotIn('FAIL', statuses)
        self.assertTrue(any(s in ('xfail', 'xpass') for s in statuses))
        values = dict(report.values)
        for suite in SUITES:
            self.assertEqual('pass', values[f"suite[{suite}]"])
