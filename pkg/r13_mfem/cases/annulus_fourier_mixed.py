from typing import Callable, Dict

from r13_mfem.cases.base import BaseCase
from r13_mfem.cases.case_types import CaseType
from r13_mfem.cases.check_result import CheckResult
from r13_mfem.cases.column_header import ColumnHeader, ColumnHeaderArray
from r13_mfem.cases.config import CaseConfig
from r13_mfem.cases.report import CaseReport
from r13_mfem.exceptions import R13Exception

# unenriched oscillation indicator relative to the enriched one, unless the solve detected a singular matrix
INSTABILITY_RATIO_BOUND = 10.0


class AnnulusFourierMixed(BaseCase):
    """
    Rotating cylinders with different wall temperatures, run with several element presets on the same mesh to
    expose the instability of the unenriched stress element.
    """

    def __init__(self):
        self._headers = ColumnHeaderArray([
            ColumnHeader('preset', 'element preset'),
            ColumnHeader('kn', 'Knudsen number'),
            ColumnHeader('h', 'maximum triangle diameter'),
            ColumnHeader('singular', '1 when the direct solve detected a singular matrix'),
            ColumnHeader('residual', 'relative residual of the solve'),
            ColumnHeader('oscillation_u', 'inter-element oscillation indicator of |u|', 'u'),
        ])

    def this_type(self) -> CaseType:
        return CaseType.AnnulusFourierMixed

    def name(self) -> str:
        return "Annulus with mixed wall temperatures, element preset comparison"

    def short_name(self) -> str:
        return "Annulus-Fourier-Mixed"

    def headers(self) -> ColumnHeaderArray:
        return self._headers

    def get_number_of_progress_steps(self, config: CaseConfig) -> int:
        return len(config.kn) * len(config.h) * len(config.run_presets())

    def run(self, config: CaseConfig, cb_progress_increment: Callable, cb_progress_done: Callable) -> CaseReport:
        report = self.new_report(config)
        rows = []
        try:
            self.check_config(config)
            for h in config.h:
                mesh = self.annulus_mesh(h)
                for kn in config.kn:
                    indicators: Dict[str, float] = {}
                    singular: Dict[str, bool] = {}
                    for preset in config.run_presets():
                        solution, indicators[preset.value] = self.run_preset(config, mesh, kn, preset, report)
                        singular[preset.value] = solution.method != 'lu'
                        rows.append([preset.value, kn, mesh.h_max, int(singular[preset.value]), solution.residual,
                                     indicators[preset.value]])
                        cb_progress_increment()
                    enriched = indicators.get('enriched')
                    if enriched:
                        for name, value in indicators.items():
                            if name == 'enriched':
                                continue
                            ratio = value / enriched
                            check = f"oscillation_ratio[{name}/enriched, kn={kn:g}, h={h:g}]"
                            report.add_value(check, ratio)
                            # a detected singular matrix is the instability as well
                            report.add_check(CheckResult('annulus_fourier_mixed', check, ratio, INSTABILITY_RATIO_BOUND,
                                                         singular[name] or ratio >= INSTABILITY_RATIO_BOUND))
            report.add_table('comparison', self.headers(), rows)
        except R13Exception as e:
            report.fail(str(e))
            cb_progress_done(False, str(e))
            return report
        return self.finish(report, cb_progress_done)
