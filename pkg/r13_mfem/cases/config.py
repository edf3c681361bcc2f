"""
Case configuration: a plain `key = value` text format with `#` comments, comma-separated lists and
`label:value` pairs for wall data, where labels are boundary names such as `inner` or integer label ids.
"""
import logging
from math import ceil
from pathlib import Path
from typing import Dict, List, Optional, Union

from r13_mfem.cases.case_types import CaseType, CaseTypeUniqueStrings
from r13_mfem.exceptions import ConfigException, R13Exception
from r13_mfem.solver import INFSUP_PAIRS
from r13_mfem.spaces import ElementPreset
from r13_mfem.tensorops import DEFAULT_SEED

logger = logging.getLogger(__name__)

WallTable = Dict[str, float]

KNOWN_KEYS = (
    'case', 'kn', 'h', 'chi', 'preset', 'presets', 'wall_velocity', 'wall_temperature', 'out', 'seed', 'max_dofs',
    'pattern', 'n', 'pairs', 'compare_unenriched', 'slice_lines', 'slice_count', 'export_vtk'
)


def _floats(text: str) -> List[float]:
    return [float(t) for t in text.split(',') if t.strip()]


def _ints(text: str) -> List[int]:
    return [int(t) for t in text.split(',') if t.strip()]


def _words(text: str) -> List[str]:
    return [t.strip() for t in text.split(',') if t.strip()]


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"not a boolean: '{text}'")


def _wall(text: str) -> WallTable:
    table = {}
    for item in _words(text):
        label, _, value = item.partition(':')
        if not value:
            raise ValueError(f"wall entry '{item}' is not of the form label:value")
        table[label.strip()] = float(value)
    return table


def _show_list(values) -> str:
    return ', '.join(repr(v) if isinstance(v, float) else str(v) for v in values)


def _show_wall(table: WallTable) -> str:
    return ', '.join(f"{k}:{v!r}" for k, v in table.items())


class CaseConfig:
    """Resolved configuration of one case run"""

    def __init__(self, case: CaseType = CaseType.InvalidType):
        self.case = case
        self.kn: List[float] = []
        self.h: List[float] = []
        self.n: List[int] = []
        self.chi: float = 1.0
        self.preset: ElementPreset = ElementPreset.Enriched
        self.presets: List[ElementPreset] = []
        self.wall_velocity: WallTable = {}
        self.wall_temperature: WallTable = {}
        self.out: Path = Path('r13_output')
        self.seed: int = DEFAULT_SEED
        self.max_dofs: Optional[int] = None
        self.pattern: str = 'diagonal'
        self.pairs: List[str] = []
        self.compare_unenriched: bool = False
        self.slice_lines: List[str] = []
        self.slice_count: int = 81
        self.export_vtk: bool = False
        self.check_ok_messages: List[str] = []

    @staticmethod
    def defaults_for(case: CaseType) -> 'CaseConfig':
        """Returns a configuration holding the default parameters of a case"""
        c = CaseConfig(case)
        if case == CaseType.AnnulusCouette:
            c.kn = [0.05, 0.1, 0.2, 0.4]
            c.h = [0.2, 0.1, 0.05, 0.025, 0.0125]
            c.wall_velocity = {'inner': 1.0, 'outer': 1.0}
            c.wall_temperature = {'inner': 1.0, 'outer': 1.0}
        elif case == CaseType.AnnulusFourierMixed:
            c.kn = [0.1]
            c.h = [0.1]
            c.presets = [ElementPreset.Enriched, ElementPreset.EqualOrder]
            c.wall_velocity = {'inner': 1.0, 'outer': 1.0}
            c.wall_temperature = {'inner': 1.0, 'outer': 2.0}
        elif case == CaseType.CavityFourier:
            c.kn = [0.01, 0.05, 0.2]
            c.h = [0.02]
            c.pattern = 'symmetric'
            c.wall_velocity = {'bottom': 0.0, 'rest': 0.0}
            c.wall_temperature = {'bottom': 1.0, 'rest': 0.0}
        elif case == CaseType.EdgeFlow:
            c.kn = [0.001]
            c.h = [0.2]
            c.presets = [ElementPreset.Enriched, ElementPreset.TaylorHood]
            c.wall_velocity = {'inner': 0.0, 'outer': 0.0}
            c.wall_temperature = {'inner': 0.0, 'outer': 1.0}
            c.slice_lines = ['y=0.5', 'y=4.5']
        elif case == CaseType.InfSupStudy:
            c.kn = [1.0]
            c.h = [0.5, 0.25, 0.125]
            c.presets = [ElementPreset.Enriched, ElementPreset.EqualOrder]
            c.pairs = list(INFSUP_PAIRS)
            c.wall_velocity = {'bottom': 0.0, 'rest': 0.0}
            c.wall_temperature = {'bottom': 0.0, 'rest': 0.0}
        elif case == CaseType.ElementDiagnostics:
            c.kn = [1.0]
            c.h = [0.5, 0.25, 0.125]
            c.pairs = list(INFSUP_PAIRS)
            c.compare_unenriched = True
        return c

    @staticmethod
    def parse(text: str, base: Optional['CaseConfig'] = None) -> 'CaseConfig':
        """
        Parses configuration text.  The `case` key selects the defaults that the remaining keys override.

        :param text: The configuration text
        :param base: Optional configuration to start from instead of the case defaults
        :return: The parsed CaseConfig
        :raises ConfigException: on unknown keys or malformed values
        """
        entries: Dict[str, str] = {}
        messages = []
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition('=')
            key = key.strip()
            if not sep:
                messages.append(f"line {number}: expected 'key = value', got '{raw.strip()}'")
            elif key not in KNOWN_KEYS:
                messages.append(f"line {number}: unknown key '{key}'")
            else:
                entries[key] = value.strip()
        if messages:
            raise ConfigException("Invalid configuration text", messages)
        if base is not None:
            config = base
        else:
            case = CaseTypeUniqueStrings.get_case_type_from_unique_string(entries.get('case', ''))
            config = CaseConfig.defaults_for(case)
        for key, value in entries.items():
            try:
                config.set_value(key, value)
            except (ValueError, R13Exception) as e:
                messages.append(f"{key}: {e}")
        if messages:
            raise ConfigException("Invalid configuration values", messages)
        return config

    @staticmethod
    def read(path: Union[str, Path]) -> 'CaseConfig':
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as e:
            raise ConfigException(f"Could not read configuration file {path}: {e}") from None
        return CaseConfig.parse(text)

    def set_value(self, key: str, value: str) -> None:
        """Sets one attribute from its text form"""
        if key == 'case':
            case = CaseTypeUniqueStrings.get_case_type_from_unique_string(value)
            if case == CaseType.InvalidType:
                raise ValueError(f"unknown case '{value}'")
            self.case = case
        elif key == 'kn':
            self.kn = _floats(value)
        elif key == 'h':
            self.h = _floats(value)
        elif key == 'n':
            self.n = _ints(value)
        elif key == 'chi':
            self.chi = float(value)
        elif key == 'preset':
            self.preset = ElementPreset.from_string(value.strip())
        elif key == 'presets':
            self.presets = [ElementPreset.from_string(w) for w in _words(value)]
        elif key == 'wall_velocity':
            self.wall_velocity = _wall(value)
        elif key == 'wall_temperature':
            self.wall_temperature = _wall(value)
        elif key == 'out':
            self.out = Path(value)
        elif key == 'seed':
            self.seed = int(value)
        elif key == 'max_dofs':
            self.max_dofs = int(value) if value.lower() not in ('', 'none') else None
        elif key == 'pattern':
            self.pattern = value
        elif key == 'pairs':
            self.pairs = _words(value)
        elif key == 'compare_unenriched':
            self.compare_unenriched = _bool(value)
        elif key == 'slice_lines':
            self.slice_lines = _words(value)
        elif key == 'slice_count':
            self.slice_count = int(value)
        elif key == 'export_vtk':
            self.export_vtk = _bool(value)
        else:
            raise ConfigException(f"Unknown configuration key '{key}'")

    def run_presets(self) -> List[ElementPreset]:
        """The presets a case runs: the presets list when given, otherwise the single preset"""
        return list(self.presets) if self.presets else [self.preset]

    def square_subdivisions(self) -> List[int]:
        """Subdivisions per side of unit-square meshes: the n list when given, otherwise ceil(1/h), even if needed"""
        if self.n:
            return list(self.n)
        response = []
        for h in self.h:
            n = max(1, ceil(1.0 / h - 1e-9))
            if self.pattern == 'symmetric' and n % 2:
                n += 1
            response.append(n)
        return response

    def check_ok(self) -> bool:
        """
        Checks the configuration and returns True or False.  If False, check_ok_messages lists what is wrong.
        """
        self.check_ok_messages = []
        if self.case == CaseType.InvalidType:
            self.check_ok_messages.append("No valid case selected")
        if not self.kn:
            self.check_ok_messages.append("Knudsen number list is empty")
        elif any(not k > 0.0 for k in self.kn):
            self.check_ok_messages.append(f"Knudsen numbers must be positive, got {self.kn}")
        if not self.h and not self.n:
            self.check_ok_messages.append("Mesh size list is empty")
        elif any(not h > 0.0 for h in self.h):
            self.check_ok_messages.append(f"Mesh sizes must be positive, got {self.h}")
        if any(n < 1 for n in self.n):
            self.check_ok_messages.append(f"Subdivision counts must be at least 1, got {self.n}")
        if not self.chi > 0.0:
            self.check_ok_messages.append(f"Accommodation factor must be positive, got {self.chi}")
        if self.pattern not in ('diagonal', 'symmetric'):
            self.check_ok_messages.append(f"Unknown mesh pattern '{self.pattern}'")
        for pair in self.pairs:
            if pair not in INFSUP_PAIRS:
                self.check_ok_messages.append(f"Unknown inf-sup pair '{pair}'")
        for line in self.slice_lines:
            axis, _, value = line.partition('=')
            if axis.strip() not in ('x', 'y') or not value:
                self.check_ok_messages.append(f"Slice line '{line}' is not of the form y=value or x=value")
        if self.slice_count < 2:
            self.check_ok_messages.append(f"Slice count must be at least 2, got {self.slice_count}")
        if self.max_dofs is not None and self.max_dofs < 1:
            self.check_ok_messages.append(f"DoF cap must be positive, got {self.max_dofs}")
        if self.case in (CaseType.AnnulusCouette, CaseType.AnnulusFourierMixed, CaseType.EdgeFlow):
            for label in ('inner', 'outer'):
                if label not in self.wall_velocity or label not in self.wall_temperature:
                    self.check_ok_messages.append(f"Wall data missing for boundary '{label}'")
        if self.case == CaseType.AnnulusCouette and len(self.h) < 2:
            self.check_ok_messages.append("A convergence study needs at least two mesh sizes")
        return len(self.check_ok_messages) == 0

    def describe(self) -> str:
        """Returns the fully resolved configuration in the parseable `key = value` format"""
        lines = [
            f"case = {CaseTypeUniqueStrings.get_unique_string_from_case_type(self.case)}",
            f"kn = {_show_list(self.kn)}",
            f"h = {_show_list(self.h)}",
            f"n = {_show_list(self.n)}",
            f"chi = {self.chi!r}",
            f"preset = {self.preset.value}",
            f"presets = {_show_list(p.value for p in self.presets)}",
            f"wall_velocity = {_show_wall(self.wall_velocity)}",
            f"wall_temperature = {_show_wall(self.wall_temperature)}",
            f"out = {self.out}",
            f"seed = {self.seed}",
            f"max_dofs = {self.max_dofs if self.max_dofs is not None else 'none'}",
            f"pattern = {self.pattern}",
            f"pairs = {_show_list(self.pairs)}",
            f"compare_unenriched = {self.compare_unenriched}",
            f"slice_lines = {_show_list(self.slice_lines)}",
            f"slice_count = {self.slice_count}",
            f"export_vtk = {self.export_vtk}",
        ]
        return '\n'.join(lines) + '\n'
