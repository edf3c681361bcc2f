import logging
from typing import Callable, Dict, List, Tuple

from r13_mfem.cases.base import BaseCase
from r13_mfem.cases.case_types import CaseType
from r13_mfem.cases.column_header import ColumnHeader, ColumnHeaderArray
from r13_mfem.cases.config import CaseConfig
from r13_mfem.cases.report import CaseReport
from r13_mfem.exceptions import DimensionCapException, R13Exception
from r13_mfem.solver import DENSE_DIMENSION_CAP, coercivity_witness, infsup_constant

logger = logging.getLogger(__name__)

# meshes used for the coercivity witness, the coarsest of the refinement list and one refinement
COERCIVITY_MESHES = 2


class InfSupStudy(BaseCase):
    """
    Discrete inf-sup constants of the coupling pairs on a refinement sequence of unit-square meshes, for each
    requested element preset, followed by the coercivity witness on the kernel of the constraint block.
    """

    def __init__(self):
        self._headers = ColumnHeaderArray([
            ColumnHeader('pair', 'coupling pair'),
            ColumnHeader('preset', 'element preset'),
            ColumnHeader('n', 'subdivisions per side of the unit square'),
            ColumnHeader('h', 'maximum triangle diameter'),
            ColumnHeader('beta', 'smallest non-degenerate generalized singular value'),
            ColumnHeader('near_null', 'number of values below the degeneracy threshold'),
            ColumnHeader('largest', 'largest generalized singular value'),
            ColumnHeader('dimension', 'combined dimension of the two spaces'),
        ])
        self._coercivity_headers = ColumnHeaderArray([
            ColumnHeader('preset', 'element preset'),
            ColumnHeader('n', 'subdivisions per side of the unit square'),
            ColumnHeader('kernel_dimension', 'dimension of the discrete kernel of B'),
            ColumnHeader('min_sampled', 'smallest Rayleigh quotient over the random kernel members'),
            ColumnHeader('exact_min', 'smallest generalized eigenvalue on the kernel'),
            ColumnHeader('all_positive', '1 when every sampled quotient is positive'),
        ])

    def this_type(self) -> CaseType:
        return CaseType.InfSupStudy

    def name(self) -> str:
        return "Discrete inf-sup constants and coercivity on the kernel"

    def short_name(self) -> str:
        return "Inf-Sup-Study"

    def headers(self) -> ColumnHeaderArray:
        return self._headers

    def coercivity_headers(self) -> ColumnHeaderArray:
        return self._coercivity_headers

    def get_number_of_progress_steps(self, config: CaseConfig) -> int:
        meshes = len(config.square_subdivisions())
        presets = len(config.run_presets())
        return len(config.pairs) * presets * meshes + presets * min(COERCIVITY_MESHES, meshes)

    @staticmethod
    def dimension_cap(config: CaseConfig) -> int:
        return config.max_dofs if config.max_dofs is not None else DENSE_DIMENSION_CAP

    def run(self, config: CaseConfig, cb_progress_increment: Callable, cb_progress_done: Callable) -> CaseReport:
        report = self.new_report(config)
        try:
            self.check_config(config)
            subdivisions = config.square_subdivisions()
            meshes = {n: self.square_mesh(n, config.pattern) for n in subdivisions}
            cap = self.dimension_cap(config)
            rows = []
            betas: Dict[Tuple[str, str], List[float]] = {}
            for pair in config.pairs:
                for preset in config.run_presets():
                    for n in subdivisions:
                        try:
                            result = infsup_constant(meshes[n], pair, preset, cap)
                        except DimensionCapException as e:
                            report.note(f"{pair} {preset.value} n={n}: skipped, {e}")
                            cb_progress_increment()
                            continue
                        rows.append([pair, preset.value, n, result.h, result.beta, result.near_null, result.largest,
                                     result.dimension])
                        if result.near_null == 0:
                            betas.setdefault((pair, preset.value), []).append(result.beta)
                        else:
                            report.note(f"{pair} {preset.value} n={n}: {result.near_null} near-null values")
                        logger.info(result.describe())
                        cb_progress_increment()
            report.add_table('infsup', self.headers(), rows)
            for (pair, preset_name), values in betas.items():
                report.add_value(f"beta_min[{pair}, {preset_name}]", min(values))
                report.add_value(f"beta_ratio[{pair}, {preset_name}]", min(values) / max(values))
            coercivity_rows = []
            for preset in config.run_presets():
                exact: List[float] = []
                for n in subdivisions[:COERCIVITY_MESHES]:
                    try:
                        witness = coercivity_witness(self.build(config, meshes[n], config.kn[0], preset),
                                                     seed=config.seed, dimension_cap=cap)
                    except DimensionCapException as e:
                        report.note(f"coercivity {preset.value} n={n}: skipped, {e}")
                        cb_progress_increment()
                        continue
                    coercivity_rows.append([preset.value, n, witness.kernel_dimension, witness.min_sampled,
                                            witness.exact_min, int(witness.all_positive)])
                    exact.append(witness.exact_min)
                    cb_progress_increment()
                if len(exact) == 2 and exact[0] > 0.0:
                    report.add_value(f"coercivity_refinement_ratio[{preset.value}]", exact[1] / exact[0])
            report.add_table('coercivity', self.coercivity_headers(), coercivity_rows)
        except R13Exception as e:
            report.fail(str(e))
            cb_progress_done(False, str(e))
            return report
        cb_progress_done(True)
        return report
