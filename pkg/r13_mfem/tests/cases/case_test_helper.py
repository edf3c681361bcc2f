from typing import List
from unittest import TestCase

from r13_mfem.cases.base import BaseCase
from r13_mfem.cases.case_types import CaseType
from r13_mfem.cases.check_result import CheckResult
from r13_mfem.cases.column_header import ColumnHeaderArray
from r13_mfem.cases.config import CaseConfig
from r13_mfem.cases.report import CaseReport


class ProgressRecorder:
    """Collects the progress callbacks of a case run"""
    def __init__(self):
        self.increments = 0
        self.done_calls: List[tuple] = []

    def increment(self) -> None:
        self.increments += 1

    def done(self, success: bool, message: str = '') -> None:
        self.done_calls.append((success, message))


class CaseTestHelper(TestCase):
    def check_interface(self, case: BaseCase, expected_type: CaseType):
        self.assertEqual(case.this_type(), expected_type)
        long_name = case.name()
        self.assertIsInstance(long_name, str)
        self.assertNotIn('\n', long_name)
        short_name = case.short_name()
        self.assertIsInstance(short_name, str)
        self.assertLessEqual(len(short_name), 32)
        self.assertNotIn('\n', short_name)
        headers = case.headers()
        self.assertIsInstance(headers, ColumnHeaderArray)
        self.assertGreater(len(headers.columns), 1)
        self.assertIsInstance(case.unique_string(), str)
        self.assertIsInstance(case.get_number_of_progress_steps(CaseConfig.defaults_for(expected_type)), int)

    def run_case(self, case: BaseCase, config: CaseConfig) -> CaseReport:
        """Runs a case and checks the progress callbacks against the announced step count"""
        progress = ProgressRecorder()
        report = case.run(config, progress.increment, progress.done)
        self.assertIsInstance(report, CaseReport)
        self.assertEqual(1, len(progress.done_calls))
        self.assertEqual(report.success, progress.done_calls[0][0])
        if report.success:
            self.assertEqual(case.get_number_of_progress_steps(config), progress.increments)
        return report

    def check_bad_config(self, case: BaseCase):
        config = CaseConfig.defaults_for(case.this_type())
        config.kn = [-1.0]
        progress = ProgressRecorder()
        report = case.run(config, progress.increment, progress.done)
        self.assertFalse(report.success)
        self.assertEqual([(False, "Configuration failed its checks")], progress.done_calls)
        self.assertEqual(0, progress.increments)

    @staticmethod
    def table_column(report: CaseReport, table: str, column: str) -> list:
        headers, rows = report.tables[table]
        index = headers.name_array().index(column)
        return [row[index] for row in rows]

    def check_verdicts(self, report: CaseReport):
        """A run that raised no error succeeds exactly when none of its checks failed"""
        self.assertEqual([], report.errors)
        self.assertEqual(report.success, not any(c.failed for c in report.checks))

    def find_check(self, report: CaseReport, check: str) -> CheckResult:
        matches = [c for c in report.checks if c.check == check]
        self.assertEqual(1, len(matches), f"check {check} recorded {len(matches)} times")
        return matches[0]
