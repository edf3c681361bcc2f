from dataclasses import dataclass
from typing import List

from r13_mfem.cases.column_header import ColumnHeader, ColumnHeaderArray


@dataclass
class CheckResult:
    """One measured check: passes when the measured value is on the right side of the threshold"""
    suite: str
    check: str
    measured: float
    threshold: float
    passed: bool
    expected_fail: bool = False

    @property
    def status(self) -> str:
        if self.expected_fail:
            return 'xfail' if not self.passed else 'xpass'
        return 'pass' if self.passed else 'FAIL'

    @property
    def failed(self) -> bool:
        """Expected failures never count as failed"""
        return not self.passed and not self.expected_fail

    def as_row(self) -> List:
        return [self.suite, self.check, self.measured, self.threshold, self.status]

    def describe(self) -> str:
        return f"{self.suite}/{self.check}: {self.measured:.6e} against {self.threshold:.6e}, {self.status}"


def at_most(suite: str, check: str, measured: float, threshold: float, expected_fail: bool = False) -> CheckResult:
    return CheckResult(suite, check, float(measured), threshold, bool(measured <= threshold), expected_fail)


def at_least(suite: str, check: str, measured: float, threshold: float, expected_fail: bool = False) -> CheckResult:
    return CheckResult(suite, check, float(measured), threshold, bool(measured >= threshold), expected_fail)


def check_headers() -> ColumnHeaderArray:
    return ColumnHeaderArray([
        ColumnHeader('suite', 'group the check belongs to'),
        ColumnHeader('check', 'individual check within the group'),
        ColumnHeader('measured', 'measured value'),
        ColumnHeader('threshold', 'bound the measured value is compared with'),
        ColumnHeader('status', 'pass, FAIL, or xfail/xpass for expected failures'),
    ])
