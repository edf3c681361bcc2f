import logging
from typing import Callable

from r13_mfem.cases.base import BaseCase
from r13_mfem.cases.case_types import CaseType
from r13_mfem.cases.check_result import at_most
from r13_mfem.cases.column_header import ColumnHeader, ColumnHeaderArray
from r13_mfem.cases.config import CaseConfig
from r13_mfem.cases.report import CaseReport
from r13_mfem.exceptions import R13Exception
from r13_mfem.export import write_vtk
from r13_mfem.postproc import function_norm, symmetry_error

logger = logging.getLogger(__name__)

# relative tolerances checked by the report
SYMMETRY_TOLERANCE = 1e-8
PRESSURE_MEAN_TOLERANCE = 1e-10


class CavityFourier(BaseCase):
    """
    Gas at rest in the unit square, heated through the bottom wall.  The problem data are invariant under the
    reflection x -> 1-x, so on a mirror-symmetric mesh the temperature must be too.
    """

    def __init__(self):
        self._headers = ColumnHeaderArray([
            ColumnHeader('kn', 'Knudsen number'),
            ColumnHeader('n', 'subdivisions per side of the unit square'),
            ColumnHeader('unknowns', 'size of the linear system'),
            ColumnHeader('residual', 'relative residual of the direct solve'),
            ColumnHeader('symmetry_theta', 'relative L2 distance of theta and its mirror image', 'theta'),
            ColumnHeader('pressure_mean', 'absolute integral of the discrete pressure', 'p'),
            ColumnHeader('pressure_norm', 'L2 norm of the discrete pressure', 'p'),
            ColumnHeader('theta_norm', 'L2 norm of the temperature', 'theta'),
        ])

    def this_type(self) -> CaseType:
        return CaseType.CavityFourier

    def name(self) -> str:
        return "Heated cavity, Fourier flow symmetry report"

    def short_name(self) -> str:
        return "Cavity-Fourier"

    def headers(self) -> ColumnHeaderArray:
        return self._headers

    def get_number_of_progress_steps(self, config: CaseConfig) -> int:
        return len(config.kn) * len(config.square_subdivisions())

    def run(self, config: CaseConfig, cb_progress_increment: Callable, cb_progress_done: Callable) -> CaseReport:
        report = self.new_report(config)
        rows = []
        try:
            self.check_config(config)
            if config.pattern != 'symmetric':
                report.note("The mesh pattern is not mirror-symmetric, so the symmetry checks are expected to fail")
            for n in config.square_subdivisions():
                mesh = self.square_mesh(n, config.pattern)
                for kn in config.kn:
                    system = self.build(config, mesh, kn, config.preset)
                    solution, singular, message = self.solve_or_fallback(system)
                    if singular:
                        report.note(f"kn={kn:g}, n={n}: {message}")
                    asymmetry = symmetry_error(solution.theta)
                    mean = abs(solution.pressure_mean())
                    p_norm = function_norm(solution.p)
                    rows.append([kn, n, system.size, solution.residual, asymmetry, mean, p_norm,
                                 function_norm(solution.theta)])
                    tag = f"kn={kn:g}, n={n}"
                    mirrored = config.pattern == 'symmetric'
                    symmetric = report.add_check(at_most('cavity_fourier', f"theta asymmetry[{tag}]", asymmetry,
                                                         SYMMETRY_TOLERANCE, expected_fail=not mirrored))
                    report.add_value(f"symmetric[{tag}]", symmetric.passed)
                    relative_mean = mean / p_norm if p_norm > 0.0 else mean
                    zero_mean = report.add_check(at_most('cavity_fourier', f"relative pressure mean[{tag}]",
                                                         relative_mean, PRESSURE_MEAN_TOLERANCE))
                    report.add_value(f"zero_mean_pressure[{tag}]", zero_mean.passed)
                    logger.info("Cavity %s: asymmetry %.3e, |int p| %.3e", tag, asymmetry, mean)
                    if config.export_vtk:
                        out = self.case_dir(config, self.unique_string())
                        report.add_file(write_vtk(solution, out / f"cavity_n{n}_kn{self.format_kn(kn)}.vtk"))
                    cb_progress_increment()
            report.add_table('symmetry', self.headers(), rows)
        except R13Exception as e:
            report.fail(str(e))
            cb_progress_done(False, str(e))
            return report
        return self.finish(report, cb_progress_done)
