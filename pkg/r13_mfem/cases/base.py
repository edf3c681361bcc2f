import logging
import os
from abc import abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Iterable, List, Tuple

from r13_mfem.assembly import BlockSystem, WallData, build_system
from r13_mfem.cases.case_types import CaseType, CaseTypeUniqueStrings
from r13_mfem.cases.column_header import ColumnHeaderArray
from r13_mfem.cases.config import CaseConfig
from r13_mfem.cases.report import CaseReport
from r13_mfem.exceptions import ConfigException, SingularSystemException
from r13_mfem.export import write_vtk
from r13_mfem.mesh import Mesh, build_annulus_mesh, build_square_with_hole_mesh, build_unit_square_mesh
from r13_mfem.postproc import oscillation_indicator
from r13_mfem.solver import Solution, solve, solve_min_norm
from r13_mfem.spaces import ElementPreset

logger = logging.getLogger(__name__)

ANNULUS_RADII = (0.5, 2.0)
THREADS_VARIABLE = 'R13_THREADS'
# larger singular systems take the sparse iterated-Tikhonov path of the minimum-norm solve
FALLBACK_DENSE_CAP = 4000


class BaseCase:
    """
    This class represents an abstract experiment driver.  A case takes a resolved CaseConfig, builds meshes and
    systems, solves them and collects its findings in a CaseReport.  Derived classes override the abstract methods
    below; the static helpers hold what the concrete cases share.
    """

    def this_type(self) -> CaseType:
        """
        Returns the CaseType enumeration for the derived case class.

        :return: Entry from the CaseType enumeration
        """
        return CaseType.InvalidType

    def unique_string(self) -> str:
        return CaseTypeUniqueStrings.get_unique_string_from_case_type(self.this_type())

    @abstractmethod
    def name(self) -> str:  # pragma: no cover
        """
        Must be overridden to return a meaningful descriptive name for this case

        :return: String long name for this case
        """
        pass

    @abstractmethod
    def short_name(self) -> str:  # pragma: no cover
        """
        Must be overridden to return a brief (max 32 characters) name for this case

        :return: String short name for this case
        """
        pass

    @abstractmethod
    def headers(self) -> ColumnHeaderArray:  # pragma: no cover
        """
        Must be overridden to return the columns of the main output table of this case

        :return: ColumnHeaderArray instance
        """
        pass

    @abstractmethod
    def get_number_of_progress_steps(self, config: CaseConfig) -> int:  # pragma: no cover
        """
        Must be overridden to return the number of progress increment calls made while running a configuration

        :param config: The resolved configuration
        :return: Integer number of expected progress increment calls
        """
        pass

    @abstractmethod
    def run(self, config: CaseConfig, cb_progress_increment: Callable,
            cb_progress_done: Callable) -> CaseReport:  # pragma: no cover
        """
        Must be overridden to run the case.

        :param config: A configuration that passed check_ok
        :param cb_progress_increment: A callback to alert the caller to increment progress; takes no arguments
        :param cb_progress_done: A callback to alert the caller that the run is complete; accepts a boolean
                                 success flag and a string message
        :return: The CaseReport
        """
        pass

    def new_report(self, config: CaseConfig) -> CaseReport:
        return CaseReport(self.name(), config.describe())

    @staticmethod
    def check_config(config: CaseConfig) -> None:
        if not config.check_ok():
            raise ConfigException("Configuration failed its checks", config.check_ok_messages)

    @staticmethod
    def wall_data(config: CaseConfig, mesh: Mesh, kn: float) -> WallData:
        """Resolves the named wall tables of a configuration against the labels of a mesh"""
        velocity = {mesh.label_id(name): value for name, value in config.wall_velocity.items()}
        temperature = {mesh.label_id(name): value for name, value in config.wall_temperature.items()}
        return WallData(kn, config.chi, velocity, temperature)

    @staticmethod
    def annulus_mesh(h: float) -> Mesh:
        return build_annulus_mesh(ANNULUS_RADII[0], ANNULUS_RADII[1], h)

    @staticmethod
    def hole_mesh(h: float) -> Mesh:
        return build_square_with_hole_mesh(h)

    @staticmethod
    def square_mesh(n: int, pattern: str) -> Mesh:
        return build_unit_square_mesh(n, pattern)

    @staticmethod
    def build(config: CaseConfig, mesh: Mesh, kn: float, preset: ElementPreset) -> BlockSystem:
        return build_system(mesh, preset, BaseCase.wall_data(config, mesh, kn), config.max_dofs)

    @staticmethod
    def solve_or_fallback(system: BlockSystem, dense_cap: int = FALLBACK_DENSE_CAP) -> Tuple[Solution, bool, str]:
        """
        Solves a system directly; a singular system falls back to the minimum-norm solution, dense up to
        dense_cap unknowns and iterated Tikhonov above.

        :return: Tuple (solution, singular flag, message)
        """
        try:
            return solve(system), False, 'regular'
        except SingularSystemException as e:
            logger.warning("Singular %s system: %s", system.preset.value, e)
            return solve_min_norm(system, dense_cap), True, f"singular ({e}); minimum-norm solution used"

    @staticmethod
    def thread_count() -> int:
        """Worker threads for sweeps, capped by the R13_THREADS environment variable"""
        try:
            return max(1, int(os.environ.get(THREADS_VARIABLE, '1')))
        except ValueError:
            logger.warning("Ignoring non-integer %s=%s", THREADS_VARIABLE, os.environ[THREADS_VARIABLE])
            return 1

    @staticmethod
    def sweep(func: Callable, items: Iterable, cb_progress_increment: Callable) -> List:
        """
        Maps func over the items on up to thread_count() threads, keeping the item order of the results and calling
        the progress callback once per finished item.
        """
        items = list(items)
        threads = min(BaseCase.thread_count(), max(len(items), 1))
        if threads == 1:
            results = []
            for item in items:
                results.append(func(item))
                cb_progress_increment()
            return results
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(func, item) for item in items]
            results = []
            for future in futures:
                results.append(future.result())
                cb_progress_increment()
        return results

    @staticmethod
    def case_dir(config: CaseConfig, case_string: str):
        path = config.out / case_string
        path.mkdir(parents=True, exist_ok=True)
        return path

    @staticmethod
    def format_kn(kn: float) -> str:
        return f"{kn:g}".replace('.', 'p')

    @staticmethod
    def finish(report: CaseReport, cb_progress_done: Callable) -> CaseReport:
        """Signals the end of a run that raised no error; missed checks make it a failed run"""
        cb_progress_done(report.success, '; '.join(c.describe() for c in report.failed_checks()))
        return report

    @staticmethod
    def summary_values(values: Dict[str, float]) -> str:
        return ', '.join(f"{k}={v:.4e}" for k, v in values.items())

    def run_preset(self, config: CaseConfig, mesh: Mesh, kn: float, preset: ElementPreset,
                   report: CaseReport) -> Tuple[Solution, float]:
        """
        Builds and solves one preset of a comparison case, recording singularity, residual and the velocity
        oscillation indicator in the report and exporting the fields when requested.

        :return: Tuple (solution, oscillation indicator of |u|)
        """
        system = self.build(config, mesh, kn, preset)
        solution, singular, message = self.solve_or_fallback(system)
        tag = f"{preset.value}, kn={kn:g}"
        report.add_value(f"unknowns[{tag}]", system.size)
        report.add_value(f"singular[{tag}]", singular)
        report.add_value(f"residual[{tag}]", solution.residual)
        indicator = oscillation_indicator(solution.u)
        report.add_value(f"oscillation_u[{tag}]", indicator)
        report.note(f"{tag}: {message}")
        if config.export_vtk:
            out = self.case_dir(config, self.unique_string())
            report.add_file(write_vtk(solution, out / f"{preset.value}_kn{self.format_kn(kn)}.vtk"))
        return solution, indicator
