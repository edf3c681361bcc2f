"""
Post-processing of discrete solutions: norms, errors between solutions on different meshes or against analytic
fields, empirical orders of convergence, the inter-element oscillation indicator, line slices, the reflection
symmetry error and the higher-order closure moments.
"""
import logging
from dataclasses import dataclass, field
from math import log
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from r13_mfem.elements import ASSEMBLY_DEGREE, edge_quadrature
from r13_mfem.exceptions import R13Exception
from r13_mfem.solver import Solution
from r13_mfem.spaces import FIELD_NAMES, FEFunction
from r13_mfem.tensorops import embedded_gradient, stf3_project, stf_project

logger = logging.getLogger(__name__)

NORMS = ('L2', 'H1', 'H1_SEMI')
PointField = Callable[[np.ndarray], np.ndarray]
# an analytic field: values callable plus an optional gradient callable (n, 2) -> (n, components, 2)
AnalyticField = Tuple[PointField, Optional[PointField]]


def _weights(function: FEFunction) -> np.ndarray:
    return function.space.component_weights


def _combine(l2_squared: float, semi_squared: float, norm: str) -> float:
    if norm == 'L2':
        return float(np.sqrt(l2_squared))
    if norm == 'H1_SEMI':
        return float(np.sqrt(semi_squared))
    if norm == 'H1':
        return float(np.sqrt(l2_squared + semi_squared))
    raise R13Exception(f"Unknown norm '{norm}', expected one of {NORMS}")


def function_norm(function: FEFunction, norm: str = 'L2', degree: int = ASSEMBLY_DEGREE) -> float:
    """
    Norm of a discrete field by quadrature, with the Frobenius component weights of its space.

    :param function: The field
    :param norm: 'L2', 'H1' or 'H1_SEMI'
    :param degree: Quadrature exactness
    """
    _, weights = function.space.quadrature_points(degree)
    w = _weights(function)
    values = function.cell_values(degree)
    l2 = np.einsum('tq,c,tqc->', weights, w, values ** 2)
    semi = 0.0
    if norm != 'L2':
        semi = np.einsum('tq,c,tqcd->', weights, w, function.cell_gradients(degree) ** 2)
    return _combine(l2, semi, norm)


def field_norms(solution: Solution, which: str = 'L2', degree: int = ASSEMBLY_DEGREE) -> Dict[str, float]:
    """Norms of every field of a solution, keyed by field name"""
    return {name: function_norm(solution[name], which, degree) for name in FIELD_NAMES}


def function_error(function: FEFunction, other: Union[FEFunction, AnalyticField], snap: float = 1e-12,
                   extrapolate: float = 0.0, degree: int = ASSEMBLY_DEGREE) -> Tuple[float, float]:
    """
    Squared L2 and H1-seminorm errors between a discrete field and another discrete field or an analytic field.

    For two discrete fields the one on the mesh with more triangles is the integration master and the other is
    evaluated at the master's quadrature points by point location.

    :return: Tuple (L2 error squared, H1 seminorm error squared); the seminorm is NaN for analytic fields given
             without a gradient callable
    """
    if isinstance(other, FEFunction):
        if other.space.mesh.num_triangles > function.space.mesh.num_triangles:
            function, other = other, function
    master = function
    points, weights = master.space.quadrature_points(degree)
    w = _weights(master)
    values = master.cell_values(degree)
    gradients = master.cell_gradients(degree)
    flat = points.reshape(-1, 2)
    if isinstance(other, FEFunction):
        if other.space.mesh is master.space.mesh:
            other_values, other_gradients = other.cell_values(degree), other.cell_gradients(degree)
        else:
            v, g, _ = other.evaluate(flat, snap=snap, extrapolate=extrapolate, strict=True)
            other_values, other_gradients = v.reshape(values.shape), g.reshape(gradients.shape)
    else:
        value_func, gradient_func = other
        other_values = np.asarray(value_func(flat), dtype=float).reshape(values.shape)
        other_gradients = None
        if gradient_func is not None:
            other_gradients = np.asarray(gradient_func(flat), dtype=float).reshape(gradients.shape)
    l2 = float(np.einsum('tq,c,tqc->', weights, w, (values - other_values) ** 2))
    if other_gradients is None:
        return l2, float('nan')
    semi = float(np.einsum('tq,c,tqcd->', weights, w, (gradients - other_gradients) ** 2))
    return l2, semi


def error_between(solution: Solution, other: Union[Solution, Dict[str, AnalyticField]],
                  fields: Sequence[str] = FIELD_NAMES, snap: float = 1e-12, extrapolate: float = 0.0,
                  degree: int = ASSEMBLY_DEGREE) -> Dict[str, Dict[str, float]]:
    """
    Per-field L2 and H1 errors between two solutions, or between a solution and analytic fields.

    :param solution: The discrete solution
    :param other: A second Solution, possibly on another mesh, or a dict of analytic (values, gradients) pairs
    :param fields: The fields to compare; analytic comparisons use the keys of the dict
    :param snap: Barycentric tolerance for point location
    :param extrapolate: Barycentric margin for points just outside a polygonal domain approximation
    :return: Dict field -> {'L2': error, 'H1': error}
    """
    if not isinstance(other, Solution):
        fields = [name for name in fields if name in other]
    response = {}
    for name in fields:
        target = other[name]
        l2, semi = function_error(solution[name], target, snap, extrapolate, degree)
        response[name] = {'L2': float(np.sqrt(l2)), 'H1': float(np.sqrt(l2 + semi))}
    return response


@dataclass
class ConvergenceRow:
    h: float
    errors: Dict[str, float]
    eoc: Dict[str, float] = field(default_factory=dict)


class ConvergenceTable:
    """Rows of mesh size and errors with the empirical order of convergence against the previous row"""

    def __init__(self, rows: List[ConvergenceRow]):
        self.rows = rows

    @property
    def keys(self) -> List[str]:
        return list(self.rows[0].errors.keys()) if self.rows else []

    def column_names(self) -> List[str]:
        return ['h'] + [f"e_{k}" for k in self.keys] + [f"eoc_{k}" for k in self.keys]

    def as_rows(self) -> List[List[float]]:
        response = []
        for row in self.rows:
            eocs = [row.eoc.get(k, float('nan')) for k in self.keys]
            response.append([row.h] + [row.errors[k] for k in self.keys] + eocs)
        return response

    def min_eoc(self, key: str) -> float:
        values = [row.eoc[key] for row in self.rows if key in row.eoc]
        return min(values) if values else float('nan')

    def describe(self) -> str:
        response = ' '.join(f"{c:>14}" for c in self.column_names()) + '\n'
        for values in self.as_rows():
            response += ' '.join(f"{v:14.6e}" for v in values) + '\n'
        return response


def eoc(rows: Sequence[Tuple[float, Dict[str, float]]]) -> ConvergenceTable:
    """
    Empirical orders of convergence log(e_prev/e_cur) / log(h_prev/h_cur), defined from the second row on.

    :param rows: Sequence of (h, {key: error}) with strictly decreasing h
    :return: The ConvergenceTable
    """
    if len(rows) < 2:
        raise R13Exception("At least two rows are needed for convergence orders")
    table = []
    for i, (h, errors) in enumerate(rows):
        if any(not e > 0.0 for e in errors.values()):
            raise R13Exception(f"Errors must be positive for convergence orders, got {errors} at h={h}")
        row = ConvergenceRow(float(h), dict(errors))
        if i > 0:
            h_prev, errors_prev = rows[i - 1]
            if not h < h_prev:
                raise R13Exception(f"Mesh sizes must decrease strictly, got {h_prev} then {h}")
            row.eoc = {k: log(errors_prev[k] / e) / log(h_prev / h) for k, e in errors.items()}
        table.append(row)
    return ConvergenceTable(table)


def _scalar_gradients(values: np.ndarray, gradients: np.ndarray, magnitude: bool) -> np.ndarray:
    """Gradient (n, 2) of the pointwise magnitude, or of the first component; zero where the magnitude vanishes"""
    if not magnitude:
        return gradients[:, 0, :]
    norms = np.linalg.norm(values, axis=1)
    nonzero = norms > 0.0
    response = np.zeros((len(values), 2))
    response[nonzero] = np.einsum('nc,ncd->nd', values[nonzero], gradients[nonzero]) / norms[nonzero, None]
    return response


def _edge_bary(local: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Barycentric points (E, q, 3) at parameters t (E, q) along local edge k of every triangle, from vertex k+1"""
    bary = np.zeros(t.shape + (3,))
    rows = np.arange(len(local))[:, None]
    columns = np.arange(t.shape[1])[None, :]
    bary[rows, columns, ((local + 1) % 3)[:, None]] = 1.0 - t
    bary[rows, columns, ((local + 2) % 3)[:, None]] = t
    return bary


def oscillation_indicator(function: FEFunction, magnitude: bool = True, degree: int = ASSEMBLY_DEGREE) -> float:
    """
    Normalized inter-element jump energy of the gradient,

        sqrt(sum_e h_e^3 int_e |[grad f]|^2 ds) / ||f||_0

    over the interior edges, where f is the pointwise magnitude of a vector field when requested and the first
    component otherwise.  Affine fields give zero and resolved smooth fields O(h^(k+1)) for elements of degree k;
    checkerboard modes give values of order one and above.

    :return: Zero for the zero field; invariant under scaling
    """
    mesh = function.space.mesh
    _, weights = function.space.quadrature_points(degree)
    values = function.cell_values(degree)
    scalar = np.linalg.norm(values, axis=2) if magnitude else values[:, :, 0]
    total = float(np.einsum('tq,tq->', weights, scalar ** 2))
    interior = np.nonzero(mesh.edge_counts == 2)[0]
    if total <= 0.0 or len(interior) == 0:
        return 0.0
    rule = edge_quadrature(degree)
    left, right = mesh.edge_triangles[interior, 0], mesh.edge_triangles[interior, 1]
    local_left, local_right = mesh.edge_local_index[interior, 0], mesh.edge_local_index[interior, 1]
    t = np.broadcast_to(rule.points, (len(interior), len(rule)))
    # both sides see the edge points in the same order once the parameter follows the shared start vertex
    same = mesh.triangles[left, (local_left + 1) % 3] == mesh.triangles[right, (local_right + 1) % 3]
    t_right = np.where(same[:, None], t, 1.0 - t)
    sides = []
    for triangles, local, params in ((left, local_left, t), (right, local_right, t_right)):
        bary = _edge_bary(local, params).reshape(-1, 3)
        v, g = function.evaluate_in_cells(np.repeat(triangles, len(rule)), bary)
        sides.append(_scalar_gradients(v, g, magnitude))
    jumps = np.sum((sides[0] - sides[1]) ** 2, axis=1).reshape(len(interior), len(rule))
    lengths = np.linalg.norm(mesh.vertices[mesh.edges[interior, 1]] - mesh.vertices[mesh.edges[interior, 0]], axis=1)
    energy = float(np.sum(lengths ** 4 * (jumps @ rule.weights)))
    return float(np.sqrt(energy / total))


@dataclass
class ClosureMoments:
    """Closure moments at the quadrature points of every element"""
    points: np.ndarray   # (T, q, 2)
    m: np.ndarray        # (T, q, 3, 3, 3)
    r: np.ndarray        # (T, q, 3, 3)
    delta: np.ndarray    # (T, q)


def closure_moments(solution: Solution, degree: int = ASSEMBLY_DEGREE) -> ClosureMoments:
    """
    The higher-order moments from the discrete gradients:
    m = -2 Kn Stf(grad sigma~), R = -(24/5) Kn stf(grad s) and Delta = -12 Kn div s, in three dimensions.
    """
    kn = solution.kn
    points, _ = solution.sigma.space.quadrature_points(degree)
    m = -2.0 * kn * stf3_project(embedded_gradient(solution.sigma.cell_gradients(degree)))
    s_gradients = solution.s.cell_gradients(degree)
    embedded = np.zeros(s_gradients.shape[:-2] + (3, 3))
    embedded[..., :2, :2] = s_gradients
    r = -(24.0 / 5.0) * kn * stf_project(embedded, 3)
    delta = -12.0 * kn * np.einsum('tqii->tq', s_gradients)
    return ClosureMoments(points, m, r, delta)


@dataclass
class SliceSample:
    """Values along a line; points outside the domain carry NaN and a False mask entry"""
    points: np.ndarray
    values: np.ndarray
    found: np.ndarray

    @property
    def skipped(self) -> int:
        return int(np.count_nonzero(~self.found))


def slice_points(axis: str, position: float, start: float, stop: float, count: int) -> np.ndarray:
    """Points on the line y = position (axis 'x') or x = position (axis 'y'), from start to stop"""
    if count < 2:
        raise R13Exception(f"A slice needs at least 2 points, got {count}")
    run = np.linspace(start, stop, count)
    fixed = np.full(count, float(position))
    if axis == 'x':
        return np.stack([run, fixed], axis=1)
    if axis == 'y':
        return np.stack([fixed, run], axis=1)
    raise R13Exception(f"Slice axis must be 'x' or 'y', got '{axis}'")


def sample_slice(function: FEFunction, axis: str, position: float, start: float, stop: float, count: int,
                 snap: float = 1e-10) -> SliceSample:
    """
    Samples a field along an axis-aligned line.  Points in holes or outside the domain are skipped and flagged.

    :param function: The field
    :param axis: 'x' for a horizontal line y = position, 'y' for a vertical line x = position
    :return: SliceSample with values (count, components)
    """
    points = slice_points(axis, position, start, stop, count)
    values, _, found = function.evaluate(points, snap=snap, strict=False)
    if not np.all(found):
        logger.debug("Slice of %s: %d of %d points outside the domain", function.name, np.count_nonzero(~found), count)
    return SliceSample(points, values, found)


def symmetry_error(function: FEFunction, mirror_x: float = 0.5, snap: float = 1e-10,
                   degree: int = ASSEMBLY_DEGREE) -> float:
    """
    Relative L2 distance between a scalar field f(x, y) and its reflection f(2 mirror_x - x, y).

    :return: ||f - f o reflection||_0 / ||f||_0, or zero for the zero field
    """
    points, weights = function.space.quadrature_points(degree)
    values = function.cell_values(degree)[..., 0]
    mirrored_points = points.reshape(-1, 2).copy()
    mirrored_points[:, 0] = 2.0 * mirror_x - mirrored_points[:, 0]
    mirrored, _, _ = function.evaluate(mirrored_points, snap=snap, strict=True)
    mirrored = mirrored[:, 0].reshape(values.shape)
    total = float(np.einsum('tq,tq->', weights, values ** 2))
    if total <= 0.0:
        return 0.0
    return float(np.sqrt(np.einsum('tq,tq->', weights, (values - mirrored) ** 2) / total))
