import logging
from typing import Callable, Dict, List

import numpy as np

from r13_mfem.cases.base import BaseCase
from r13_mfem.cases.case_types import CaseType
from r13_mfem.cases.check_result import at_most
from r13_mfem.cases.column_header import ColumnHeader, ColumnHeaderArray
from r13_mfem.cases.config import CaseConfig
from r13_mfem.cases.report import CaseReport
from r13_mfem.exceptions import R13Exception
from r13_mfem.postproc import sample_slice
from r13_mfem.solver import RESIDUAL_TOLERANCE, Solution
from r13_mfem.spaces import ElementPreset

logger = logging.getLogger(__name__)

DOMAIN_EXTENT = (0.0, 8.0)
# enriched oscillation indicator relative to every unenriched preset on the same mesh
OSCILLATION_RATIO_BOUND = 0.1


class EdgeFlow(BaseCase):
    """
    Thermally induced edge flow around a square obstacle in a square box.  The gas is driven only by the
    temperature difference of the walls; velocity profiles are sampled along horizontal or vertical lines.
    """

    def __init__(self):
        self._headers = ColumnHeaderArray([
            ColumnHeader('preset', 'element preset'),
            ColumnHeader('kn', 'Knudsen number'),
            ColumnHeader('h', 'maximum triangle diameter'),
            ColumnHeader('unknowns', 'size of the linear system'),
            ColumnHeader('singular', '1 when the direct solve detected a singular matrix'),
            ColumnHeader('residual', 'relative residual of the solve'),
            ColumnHeader('oscillation_u', 'inter-element oscillation indicator of |u|', 'u'),
        ])
        self._slice_headers = ColumnHeaderArray([
            ColumnHeader('x', 'first coordinate'),
            ColumnHeader('y', 'second coordinate'),
            ColumnHeader('inside', '0 when the point lies in the obstacle'),
            ColumnHeader('theta', 'temperature', 'theta'),
            ColumnHeader('u_x', 'first velocity component', 'u'),
            ColumnHeader('u_y', 'second velocity component', 'u'),
            ColumnHeader('u_magnitude', 'velocity magnitude', 'u'),
            ColumnHeader('p', 'pressure', 'p'),
        ])

    def this_type(self) -> CaseType:
        return CaseType.EdgeFlow

    def name(self) -> str:
        return "Thermally induced edge flow around a square obstacle"

    def short_name(self) -> str:
        return "Edge-Flow"

    def headers(self) -> ColumnHeaderArray:
        return self._headers

    def slice_headers(self) -> ColumnHeaderArray:
        return self._slice_headers

    def get_number_of_progress_steps(self, config: CaseConfig) -> int:
        return len(config.kn) * len(config.h) * len(config.run_presets())

    def slice_rows(self, solution: Solution, line: str, count: int) -> List[List]:
        """Samples theta, u and p along a line given as 'y=value' or 'x=value'"""
        fixed, _, value = line.partition('=')
        axis = 'x' if fixed.strip() == 'y' else 'y'
        samples = {
            name: sample_slice(solution[name], axis, float(value), DOMAIN_EXTENT[0], DOMAIN_EXTENT[1], count)
            for name in ('theta', 'u', 'p')
        }
        u = samples['u'].values
        magnitude = np.linalg.norm(u, axis=1)
        rows = []
        for i, point in enumerate(samples['theta'].points):
            rows.append([point[0], point[1], int(samples['theta'].found[i]), samples['theta'].values[i, 0],
                         u[i, 0], u[i, 1], magnitude[i], samples['p'].values[i, 0]])
        return rows

    def slice_table_name(self, preset: ElementPreset, kn: float, h: float, line: str) -> str:
        tag = line.replace("=", "").replace(".", "p")
        return f"slice_{preset.value}_kn{self.format_kn(kn)}_h{self.format_kn(h)}_{tag}"

    def run(self, config: CaseConfig, cb_progress_increment: Callable, cb_progress_done: Callable) -> CaseReport:
        report = self.new_report(config)
        rows = []
        try:
            self.check_config(config)
            for h in config.h:
                mesh = self.hole_mesh(h)
                for kn in config.kn:
                    indicators: Dict[str, float] = {}
                    for preset in config.run_presets():
                        solution, indicators[preset.value] = self.run_preset(config, mesh, kn, preset, report)
                        rows.append([preset.value, kn, mesh.h_max, solution.system.size,
                                     int(solution.method != 'lu'), solution.residual, indicators[preset.value]])
                        if preset == ElementPreset.Enriched:
                            report.add_check(at_most('edge_flow', f"residual[enriched, kn={kn:g}, h={h:g}]",
                                                     solution.residual, RESIDUAL_TOLERANCE))
                        for line in config.slice_lines:
                            report.add_table(self.slice_table_name(preset, kn, h, line), self.slice_headers(),
                                             self.slice_rows(solution, line, config.slice_count))
                        cb_progress_increment()
                    enriched = indicators.get('enriched')
                    if enriched is not None:
                        for name, value in indicators.items():
                            if name != 'enriched' and value > 0.0:
                                check = f"oscillation_ratio[enriched/{name}, kn={kn:g}, h={h:g}]"
                                report.add_value(check, enriched / value)
                                report.add_check(at_most('edge_flow', check, enriched / value,
                                                         OSCILLATION_RATIO_BOUND))
            report.add_table('comparison', self.headers(), rows)
        except R13Exception as e:
            report.fail(str(e))
            cb_progress_done(False, str(e))
            return report
        return self.finish(report, cb_progress_done)
