"""
Command line interface.  Verbs:

* ``run <config>``: runs the case named in a configuration file and writes its report and tables
* ``diagnose [config]``: runs the diagnostic suites, defaults of the element_diagnostics case when no file is given
* ``mesh <geometry>``: builds a benchmark mesh, prints its quality report and optionally writes it
* ``infsup <pair> <preset>``: discrete inf-sup constant of one pair on a unit-square mesh

Exit status is 0 on success, 1 when diagnostic checks fail and 2 for any other known error.
"""
import logging
import sys
from argparse import ArgumentParser, Namespace
from pathlib import Path
from typing import List, Optional

from r13_mfem import NICE_NAME, VERSION
from r13_mfem.cases.base import ANNULUS_RADII
from r13_mfem.cases.case_types import CaseType, CaseTypeUniqueStrings
from r13_mfem.cases.config import CaseConfig
from r13_mfem.cases.manager import CaseFactory
from r13_mfem.exceptions import ConfigException, R13Exception
from r13_mfem.mesh import (
    build_annulus_mesh, build_square_with_hole_mesh, build_unit_square_mesh, validate_mesh, write_mesh
)
from r13_mfem.solver import INFSUP_PAIRS, infsup_constant
from r13_mfem.spaces import ElementPreset

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(name)s %(levelname)s %(message)s'
EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_ERROR = 2


class ConsoleProgress:
    """Progress callbacks of a case run, reported through the log"""

    def __init__(self, title: str, total: int):
        self.title = title
        self.total = total
        self.count = 0
        self.success = True
        self.message = ''

    def increment(self) -> None:
        self.count += 1
        logger.info("%s: step %d of %d", self.title, self.count, self.total)

    def done(self, success: bool, message: str = '') -> None:
        self.success = success
        self.message = message
        if success:
            logger.info("%s: finished", self.title)
        else:
            logger.error("%s: failed: %s", self.title, message)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog='r13_mfem', description=f"{NICE_NAME} {VERSION}: mixed finite elements for the"
                                                         f" linearized R13 equations")
    parser.add_argument('--log-level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help='logging level')
    verbs = parser.add_subparsers(dest='verb', required=True)

    def add_case_options(sub: ArgumentParser) -> None:
        sub.add_argument('config_file', nargs='?', type=Path, help='configuration file')
        sub.add_argument('--config', type=Path, help='configuration file, same as the positional argument')
        sub.add_argument('--out', type=Path, help='output directory')
        sub.add_argument('--preset', choices=[p.value for p in ElementPreset], help='element preset')
        sub.add_argument('--seed', type=int, help='random seed of the diagnostics')
        sub.add_argument('--max-dofs', type=int, help='refuse systems with more unknowns than this')

    add_case_options(verbs.add_parser('run', help='run the case of a configuration file'))
    add_case_options(verbs.add_parser('diagnose', help='run the diagnostic suites'))

    mesh = verbs.add_parser('mesh', help='build a benchmark mesh')
    mesh.add_argument('geometry', choices=['square', 'annulus', 'hole'])
    mesh.add_argument('--n', type=int, default=8, help='subdivisions per side of the unit square')
    mesh.add_argument('--h', type=float, default=0.2, help='target size for the annulus and the square with hole')
    mesh.add_argument('--pattern', choices=['diagonal', 'symmetric'], default='diagonal')
    mesh.add_argument('--output', type=Path, help='mesh file to write')

    infsup = verbs.add_parser('infsup', help='discrete inf-sup constant of a coupling pair')
    infsup.add_argument('pair', choices=list(INFSUP_PAIRS))
    infsup.add_argument('preset', choices=[p.value for p in ElementPreset])
    infsup.add_argument('--n', type=int, default=4, help='subdivisions per side of the unit square')
    infsup.add_argument('--pattern', choices=['diagonal', 'symmetric'], default='diagonal')
    return parser


def resolve_config(args: Namespace, default_case: CaseType = CaseType.InvalidType) -> CaseConfig:
    """Reads the configuration file, or takes the defaults of a case, then applies the command line overrides"""
    path = args.config or args.config_file
    if path is not None:
        config = CaseConfig.read(path)
    elif default_case != CaseType.InvalidType:
        config = CaseConfig.defaults_for(default_case)
    else:
        raise ConfigException("A configuration file is required")
    if args.out is not None:
        config.out = args.out
    if args.preset is not None:
        config.preset = ElementPreset.from_string(args.preset)
    if args.seed is not None:
        config.seed = args.seed
    if args.max_dofs is not None:
        config.max_dofs = args.max_dofs
    return config


def run_config(config: CaseConfig) -> int:
    if not config.check_ok():
        for message in config.check_ok_messages:
            logger.error("Configuration: %s", message)
        return EXIT_ERROR
    case = CaseFactory.instance_factory(config.case)
    if case is None:
        logger.error("No case is available for %s", config.case.name)
        return EXIT_ERROR
    progress = ConsoleProgress(case.short_name(), case.get_number_of_progress_steps(config))
    report = case.run(config, progress.increment, progress.done)
    stem = CaseTypeUniqueStrings.get_unique_string_from_case_type(config.case)
    path = report.write(config.out / stem, stem)
    logger.info("Report written to %s", path)
    if report.success:
        return EXIT_OK
    if report.failed_checks() and not report.errors:
        for check in report.failed_checks():
            logger.error("Check failed: %s", check.describe())
        return EXIT_CHECKS_FAILED
    return EXIT_ERROR


def run_verb(args: Namespace) -> int:
    if args.verb == 'run':
        return run_config(resolve_config(args))
    if args.verb == 'diagnose':
        config = resolve_config(args, CaseType.ElementDiagnostics)
        config.case = CaseType.ElementDiagnostics
        return run_config(config)
    if args.verb == 'mesh':
        if args.geometry == 'square':
            mesh = build_unit_square_mesh(args.n, args.pattern)
        elif args.geometry == 'annulus':
            mesh = build_annulus_mesh(ANNULUS_RADII[0], ANNULUS_RADII[1], args.h)
        else:
            mesh = build_square_with_hole_mesh(args.h)
        print(validate_mesh(mesh).describe())
        if args.output is not None:
            write_mesh(mesh, args.output)
            logger.info("Mesh written to %s", args.output)
        return EXIT_OK
    report = infsup_constant(build_unit_square_mesh(args.n, args.pattern), args.pair,
                             ElementPreset.from_string(args.preset))
    print(report.describe())
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)
    try:
        return run_verb(args)
    except ConfigException as e:
        logger.error("%s", e)
        for message in e.messages:
            logger.error("Configuration: %s", message)
        return EXIT_ERROR
    except R13Exception as e:
        logger.error("%s", e)
        return EXIT_ERROR


def main_cli() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_cli()
