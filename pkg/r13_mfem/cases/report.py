from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from r13_mfem.cases.check_result import CheckResult
from r13_mfem.cases.column_header import ColumnHeaderArray
from r13_mfem.exceptions import R13Exception
from r13_mfem.export import csv_text, write_csv


class CaseReport:
    """
    Plain-text outcome of a case run: a header, notes, measured values, pass/fail checks against thresholds and
    the tables written as CSV.  Every report embeds the resolved configuration it was produced with.  A failed
    check or an error fails the report.
    """
    def __init__(self, title: str, config_echo: str):
        self.title = title
        self.config_echo = config_echo
        self.notes: List[str] = []
        self.values: List[Tuple[str, str]] = []
        self.tables: Dict[str, Tuple[ColumnHeaderArray, List[List]]] = {}
        self.files: List[Path] = []
        self.checks: List[CheckResult] = []
        self.errors: List[str] = []
        self.success = True

    def note(self, message: str) -> None:
        self.notes.append(message)

    def add_value(self, name: str, value) -> None:
        self.values.append((name, f"{value:.6e}" if isinstance(value, float) else str(value)))

    def add_table(self, name: str, headers: ColumnHeaderArray, rows: Sequence[Sequence]) -> None:
        self.tables[name] = (headers, [list(r) for r in rows])

    def add_file(self, path: Path) -> None:
        self.files.append(Path(path))

    def add_check(self, result: CheckResult) -> CheckResult:
        self.checks.append(result)
        if result.failed:
            self.success = False
        return result

    def failed_checks(self) -> List[CheckResult]:
        return [c for c in self.checks if c.failed]

    def fail(self, message: str) -> None:
        self.success = False
        self.errors.append(message)
        self.notes.append(f"FAILED: {message}")

    def describe(self) -> str:
        response = f"# {self.title}\n"
        response += f"status: {'ok' if self.success else 'failed'}\n\n"
        response += "## configuration\n" + self.config_echo + "\n"
        if self.notes:
            response += "## notes\n" + ''.join(f"* {n}\n" for n in self.notes) + "\n"
        if self.values:
            response += "## values\n" + ''.join(f"{name} = {value}\n" for name, value in self.values) + "\n"
        if self.checks:
            response += "## checks\n" + ''.join(f"{c.describe()}\n" for c in self.checks) + "\n"
        for name, (headers, rows) in self.tables.items():
            response += f"## table {name}\n" + csv_text(headers.name_array(), rows) + "\n"
        if self.files:
            response += "## files\n" + ''.join(f"{f}\n" for f in self.files)
        return response

    def write(self, out_dir: Path, stem: str) -> Path:
        """Writes every table as <stem>_<table>.csv and the report itself as <stem>_report.txt"""
        out_dir = Path(out_dir)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise R13Exception(f"Could not create output directory {out_dir}: {e}") from None
        for name, (headers, rows) in self.tables.items():
            self.add_file(write_csv(out_dir / f"{stem}_{name}.csv", headers.name_array(), rows))
        path = out_dir / f"{stem}_report.txt"
        try:
            path.write_text(self.describe())
        except OSError as e:
            raise R13Exception(f"Could not write report {path}: {e}") from None
        return path
