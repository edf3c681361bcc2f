import logging
from typing import Callable, Dict, Tuple

from r13_mfem.cases.base import BaseCase
from r13_mfem.cases.case_types import CaseType
from r13_mfem.cases.check_result import at_least
from r13_mfem.cases.column_header import ColumnHeaderArray, convergence_headers
from r13_mfem.cases.config import CaseConfig
from r13_mfem.cases.report import CaseReport
from r13_mfem.exceptions import R13Exception
from r13_mfem.export import write_vtk
from r13_mfem.postproc import eoc, error_between
from r13_mfem.solver import Solution, solve
from r13_mfem.spaces import ElementPreset

logger = logging.getLogger(__name__)

CONVERGENCE_FIELDS = ['sigma', 's', 'p', 'u', 'theta']
# the pressure order is reported but not checked
CHECKED_FIELDS = ['sigma', 's', 'u', 'theta']
MIN_ORDER = 1.7
# barycentric margin for fine-mesh points just outside a coarser polygonal approximation of the outer circle
CROSS_MESH_EXTRAPOLATION = 0.1


class AnnulusCouette(BaseCase):
    """
    Couette-Fourier flow between two rotating cylinders.  The exact solution is not available, so every mesh is
    compared with the solution on the finest mesh of the sweep (self-convergence).
    """

    def this_type(self) -> CaseType:
        return CaseType.AnnulusCouette

    def name(self) -> str:
        return "Annulus Couette-Fourier flow, self-convergence study"

    def short_name(self) -> str:
        return "Annulus-Couette"

    def headers(self) -> ColumnHeaderArray:
        return convergence_headers(CONVERGENCE_FIELDS)

    def get_number_of_progress_steps(self, config: CaseConfig) -> int:
        return len(config.kn) * len(config.h) + len(config.kn)

    def run(self, config: CaseConfig, cb_progress_increment: Callable, cb_progress_done: Callable) -> CaseReport:
        report = self.new_report(config)
        try:
            self.check_config(config)
            h_values = sorted(config.h, reverse=True)
            meshes = {h: self.annulus_mesh(h) for h in h_values}
            preset = config.preset

            def one_solve(item: Tuple[float, float]) -> Solution:
                kn, h = item
                return solve(self.build(config, meshes[h], kn, preset))

            grid = [(kn, h) for kn in config.kn for h in h_values]
            solutions: Dict[Tuple[float, float], Solution] = dict(zip(grid, self.sweep(one_solve, grid,
                                                                                      cb_progress_increment)))
            report.note("Errors are measured against the finest-mesh solution of the sweep, not an exact solution")
            report.note("Wall tangent convention: t is the counterclockwise rotation of the outward normal, so"
                        " u_t^W > 0 turns the outer wall counterclockwise and the inner wall clockwise")
            for kn in config.kn:
                reference = solutions[(kn, h_values[-1])]
                rows = []
                for h in h_values[:-1]:
                    errors = error_between(solutions[(kn, h)], reference, CONVERGENCE_FIELDS,
                                           extrapolate=CROSS_MESH_EXTRAPOLATION)
                    rows.append((meshes[h].h_max, {f"{f}_L2": errors[f]['L2'] for f in CONVERGENCE_FIELDS}))
                    report.add_value(f"residual[kn={kn:g}, h={h:g}]", solutions[(kn, h)].residual)
                if len(rows) >= 2:
                    table = eoc(rows)
                    report.add_table(f"convergence_kn{self.format_kn(kn)}", self.headers(), table.as_rows())
                    for f in CONVERGENCE_FIELDS:
                        report.add_value(f"min_eoc_{f}[kn={kn:g}]", table.min_eoc(f"{f}_L2"))
                    for f in CHECKED_FIELDS:
                        order = table.min_eoc(f"{f}_L2")
                        report.add_check(at_least('annulus_couette', f"min_eoc_{f}[kn={kn:g}]", order, MIN_ORDER,
                                                  expected_fail=preset != ElementPreset.Enriched))
                else:
                    report.note(f"Kn={kn:g}: only one comparison mesh, no convergence orders")
                if config.export_vtk:
                    out = self.case_dir(config, self.unique_string())
                    report.add_file(write_vtk(reference, out / f"solution_kn{self.format_kn(kn)}.vtk"))
                cb_progress_increment()
        except R13Exception as e:
            report.fail(str(e))
            cb_progress_done(False, str(e))
            return report
        return self.finish(report, cb_progress_done)
