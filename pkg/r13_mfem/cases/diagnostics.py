"""
Diagnostic suites of the discretization: element duality, the tensor projections and right inverses, the kernels
of the strain operators, the symbol of the trace-free gradient, the interpolation operator and the discrete inf-sup
constants.  Every check records the measured value next to its threshold.
"""
import logging
from dataclasses import dataclass, field
from itertools import permutations
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy import linalg

from r13_mfem.assembly import COMPONENT_TENSORS, DofMap, assemble_volume_forms
from r13_mfem.cases.check_result import CheckResult, at_least, at_most
from r13_mfem.cases.common_fields import CommonFields
from r13_mfem.cases.config import CaseConfig
from r13_mfem.elements import LocalTensorBasis, TriangleGeometry, sym_grad_rank
from r13_mfem.exceptions import DimensionCapException, R13Exception
from r13_mfem.interp import InterpolationContext, interpolate, local_l2_projection
from r13_mfem.mesh import Mesh, build_unit_square_mesh
from r13_mfem.postproc import eoc, function_error, function_norm
from r13_mfem.solver import DENSE_DIMENSION_CAP, infsup_constant
from r13_mfem.spaces import ElementPreset, FEFunction
from r13_mfem.tensorops import (
    divergence_right_inverse, kernel_basis, stf3_project, symbol_injectivity_check, symbol_min_singular_value
)

logger = logging.getLogger(__name__)

SUITES = ('duality', 'stf3', 'right_inverse', 'kernel', 'symbol', 'projection', 'interpolation', 'infsup')
RANDOM_TRIANGLES = 20
RANDOM_TENSORS = 100
RANDOM_POINTS = 50
SYMBOL_TRIALS = 100
INTERPOLATION_SUBDIVISIONS = (4, 8, 16, 32)
INFSUP_RATIO_BOUND = 0.8
INFSUP_SEPARATION = 10.0
INTERPOLATION_ORDER_BOUND = 0.9
IDEMPOTENCE_TOLERANCE = 1e-12
H1_STABILITY_SPREAD = 2.0


@dataclass
class DiagnosticsResult:
    results: List[CheckResult] = field(default_factory=list)

    def add(self, result: CheckResult) -> None:
        logger.debug("%s/%s: %.3e (threshold %.3e) %s", result.suite, result.check, result.measured,
                     result.threshold, result.status)
        self.results.append(result)

    @property
    def passed(self) -> bool:
        """Expected failures do not count against the outcome"""
        return not any(r.failed for r in self.results)

    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if r.failed]

    def suites(self) -> List[str]:
        return list(dict.fromkeys(r.suite for r in self.results))


def random_triangle(rng: np.random.Generator) -> np.ndarray:
    """A counterclockwise triangle with vertices in [-1, 1]^2 and area at least 0.2"""
    while True:
        vertices = rng.uniform(-1.0, 1.0, (3, 2))
        d1, d2 = vertices[1] - vertices[0], vertices[2] - vertices[0]
        area = 0.5 * (d1[0] * d2[1] - d1[1] * d2[0])
        if abs(area) >= 0.2:
            return vertices if area > 0.0 else vertices[[0, 2, 1]]


def check_duality(result: DiagnosticsResult, rng: np.random.Generator) -> None:
    worst = 0.0
    for _ in range(RANDOM_TRIANGLES):
        matrix = LocalTensorBasis(random_triangle(rng)).duality_matrix()
        worst = max(worst, float(np.abs(matrix - np.eye(27)).max()))
    result.add(at_most('duality', f"max |D - I| over {RANDOM_TRIANGLES} triangles", worst, 1e-12))


def _stf3_oracle_e111() -> np.ndarray:
    # brute force: symmetrize over the six index permutations, then remove the three delta traces
    m = np.zeros((3, 3, 3))
    m[0, 0, 0] = 1.0
    symmetric = np.zeros((3, 3, 3))
    for i in range(3):
        for j in range(3):
            for k in range(3):
                symmetric[i, j, k] = sum(m[p] for p in permutations((i, j, k))) / 6.0
    v = np.array([sum(symmetric[i, l, l] for l in range(3)) for i in range(3)])
    out = np.zeros((3, 3, 3))
    for i in range(3):
        for j in range(3):
            for k in range(3):
                out[i, j, k] = symmetric[i, j, k] - (v[i] * (j == k) + v[j] * (i == k) + v[k] * (i == j)) / 5.0
    return out


def check_stf3(result: DiagnosticsResult, rng: np.random.Generator) -> None:
    m = rng.standard_normal((RANDOM_TENSORS, 3, 3, 3))
    n = rng.standard_normal((RANDOM_TENSORS, 3, 3, 3))
    projected = stf3_project(m)
    result.add(at_most('stf3', 'idempotence', np.abs(stf3_project(projected) - projected).max(), 1e-14))
    asymmetry = max(float(np.abs(projected - np.transpose(projected, (0,) + tuple(p + 1 for p in perm))).max())
                    for perm in permutations(range(3)))
    result.add(at_most('stf3', 'full symmetry', asymmetry, 1e-14))
    traces = max(float(np.abs(np.einsum(pattern, projected)).max())
                 for pattern in ('nill->ni', 'nlil->ni', 'nlli->ni'))
    result.add(at_most('stf3', 'trace-free in every index pair', traces, 1e-14))
    pairing = np.abs(np.einsum('nijk,nijk->n', projected, n) - np.einsum('nijk,nijk->n', m, stf3_project(n)))
    result.add(at_most('stf3', 'self-adjoint', pairing.max(), 1e-13))
    e111 = np.zeros((3, 3, 3))
    e111[0, 0, 0] = 1.0
    result.add(at_most('stf3', 'e1e1e1 pattern', np.abs(stf3_project(e111) - _stf3_oracle_e111()).max(), 1e-14))


def check_right_inverses(result: DiagnosticsResult, rng: np.random.Generator) -> None:
    for d in (2, 3):
        points = rng.uniform(-1.0, 1.0, (RANDOM_POINTS, d))
        for v in kernel_basis(d):
            sigma = divergence_right_inverse(v)
            mismatch = np.abs(sigma.divergence(points) - v.evaluate(points)).max()
            result.add(at_most('right_inverse', f"div sigma - v, {v.tag.name} d={d}", mismatch, 1e-12))
            values = sigma.evaluate(points)
            result.add(at_most('right_inverse', f"symmetry, {v.tag.name} d={d}",
                                np.abs(values - np.swapaxes(values, 1, 2)).max(), 1e-12))
            if d == 3:
                result.add(at_most('right_inverse', f"trace, {v.tag.name} d=3",
                                    np.abs(np.einsum('nii->n', values)).max(), 1e-12))


def check_kernels(result: DiagnosticsResult, rng: np.random.Generator) -> None:
    for d in (2, 3):
        points = rng.uniform(-1.0, 1.0, (RANDOM_POINTS, d))
        worst = max(float(np.abs(v.strain(points)).max()) for v in kernel_basis(d))
        result.add(at_most('kernel', f"strain of the kernel basis, d={d}", worst, 1e-12))
    result.add(at_least('kernel', 'rank of sym grad from P2 vectors to P1 tensors', sym_grad_rank(), 9))
    result.add(at_least('kernel', 'rank on a random triangle', sym_grad_rank(random_triangle(rng)), 9))


def check_symbol(result: DiagnosticsResult, seed: int) -> None:
    three = symbol_injectivity_check(3, SYMBOL_TRIALS, seed)
    result.add(at_least('symbol', f"d=3 min singular value over {SYMBOL_TRIALS} directions",
                         min(three.min_singular_values), 1e-8))
    value, direction = symbol_min_singular_value(np.array([1j, -1.0]))
    result.add(at_most('symbol', 'd=2 singular value at xi=(i,-1)', value, 1e-12))
    expected = np.array([1j, 1.0]) / np.sqrt(2.0)
    result.add(at_most('symbol', 'd=2 null direction parallel to (i,1)',
                        1.0 - abs(np.vdot(expected, direction)), 1e-12))
    two = symbol_injectivity_check(2, SYMBOL_TRIALS, seed)
    result.add(at_least('symbol', 'd=2 counterexample found', float(two.counterexample_found), 1.0))


def check_projection(result: DiagnosticsResult, rng: np.random.Generator) -> None:
    vertices = random_triangle(rng)
    basis = LocalTensorBasis(vertices)
    geometry = TriangleGeometry(vertices)
    coefficients = rng.standard_normal(27)

    def member(points):
        values, _ = basis.evaluate(np.clip(geometry.to_barycentric(points), 0.0, 1.0))
        return np.einsum('nac,a->nc', values, coefficients)

    result.add(at_most('projection', 'reproduces local space members',
                        np.abs(local_l2_projection(vertices, member) - coefficients).max(), 1e-10))
    constant = np.array([0.3, -1.2, 2.5])
    projected = local_l2_projection(vertices, lambda p: np.tile(constant, (len(p), 1)))
    values, _ = basis.evaluate(np.full((1, 3), 1.0 / 3.0))
    result.add(at_most('projection', 'reproduces constants',
                        np.abs(np.einsum('nac,a->nc', values, projected) - constant).max(), 1e-12))


def _divergence_loads(dofmap: DofMap, gradient: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """(div tau, v) for every velocity basis function v, from the analytic component gradients of tau"""
    u_space = dofmap.spaces['u']
    chi, _ = u_space.tabulate()
    points, weights = u_space.quadrature_points()
    grads = gradient(points.reshape(-1, 2)).reshape(points.shape[:2] + (3, 2))
    divergence = np.einsum('eik,tqek->tqi', COMPONENT_TENSORS, grads)
    local = np.einsum('tq,tqb,tqi->tib', weights, chi, divergence)
    return np.bincount(u_space.cell_dofs.ravel(), weights=local.reshape(len(local), -1).ravel(),
                       minlength=u_space.dim)


def _rigid_motion_free_basis(dofmap: DofMap) -> np.ndarray:
    u_space = dofmap.spaces['u']
    mass = u_space.gram_matrix('L2')
    moments = np.stack([mass @ u_space.interpolate(rm) for rm in CommonFields.rigid_motions()])
    return linalg.null_space(moments)


def check_interpolation(result: DiagnosticsResult, rng: np.random.Generator) -> None:
    coarse = build_unit_square_mesh(INTERPOLATION_SUBDIVISIONS[0])
    ctx = InterpolationContext(coarse)
    space = ctx.space
    coefficients = rng.standard_normal(space.dim)
    coefficients[space.boundary_dofs()] = 0.0
    member = FEFunction(space, coefficients)
    again = interpolate(ctx, lambda p: member.evaluate(p, snap=1e-10)[0])
    result.add(at_most('interpolation', 'idempotence on zero-trace members', np.abs(again - coefficients).max(),
                        IDEMPOTENCE_TOLERANCE))

    smooth = FEFunction(space, interpolate(ctx, CommonFields.sine_bubble_tensor))
    t = np.linspace(0.0, 1.0, 10)
    trace = max(float(np.abs(smooth.edge_trace(int(e), t)).max()) for e in coarse.boundary_edges)
    result.add(at_most('interpolation', 'boundary trace', trace, 1e-14))

    dofmap = DofMap(coarse, ElementPreset.Enriched)
    polynomial = interpolate(ctx, CommonFields.polynomial_bubble_tensor)
    e_form = assemble_volume_forms(dofmap, kn=1.0)['e']
    residual = e_form @ polynomial - _divergence_loads(dofmap, CommonFields.polynomial_bubble_tensor_gradient)
    restricted = _rigid_motion_free_basis(dofmap).T @ residual
    result.add(at_most('interpolation', 'B-compatibility', np.abs(restricted).max(), 1e-10))

    rows = []
    stability = []
    seminorm = CommonFields.sine_bubble_tensor_seminorm()
    for n in INTERPOLATION_SUBDIVISIONS:
        mesh = build_unit_square_mesh(n)
        context = InterpolationContext(mesh)
        approximation = FEFunction(context.space, interpolate(context, CommonFields.sine_bubble_tensor))
        l2_squared, _ = function_error(approximation, (CommonFields.sine_bubble_tensor,
                                                       CommonFields.sine_bubble_tensor_gradient))
        rows.append((mesh.h_max, {'L2': float(np.sqrt(l2_squared))}))
        stability.append(function_norm(approximation, 'H1') / seminorm)
    result.add(at_least('interpolation', 'L2 order on the sine bubble', eoc(rows).min_eoc('L2'),
                         INTERPOLATION_ORDER_BOUND))
    result.add(at_most('interpolation', 'H1 stability constant spread', max(stability) / min(stability),
                        H1_STABILITY_SPREAD))


def check_infsup(result: DiagnosticsResult, config: CaseConfig) -> None:
    meshes: Dict[int, Mesh] = {n: build_unit_square_mesh(n, config.pattern) for n in config.square_subdivisions()}
    cap = config.max_dofs if config.max_dofs is not None else DENSE_DIMENSION_CAP
    enriched_min: Dict[str, float] = {}
    for pair in config.pairs:
        betas = []
        degenerate = 0
        for n, mesh in meshes.items():
            try:
                report = infsup_constant(mesh, pair, ElementPreset.Enriched, cap)
            except DimensionCapException as e:
                logger.warning("Skipping %s on n=%d: %s", pair, n, e)
                continue
            betas.append(report.beta)
            degenerate += report.near_null
        if not betas:
            continue
        result.add(at_most('infsup', f"{pair} near-null values, enriched", degenerate, 0))
        result.add(at_least('infsup', f"{pair} min/max over refinement, enriched", min(betas) / max(betas),
                             INFSUP_RATIO_BOUND))
        enriched_min[pair] = min(betas)
    if config.compare_unenriched and 'sigma_u' in enriched_min:
        degenerate = 0
        betas = []
        for n, mesh in meshes.items():
            try:
                report = infsup_constant(mesh, 'sigma_u', ElementPreset.EqualOrder, cap)
            except DimensionCapException as e:
                logger.warning("Skipping unenriched sigma_u on n=%d: %s", n, e)
                continue
            degenerate += report.near_null
            betas.append(report.beta)
            result.add(CheckResult('infsup', f"sigma_u unenriched n={n} stable", report.beta, 0.0,
                                   report.near_null == 0 and report.beta > 0.0, expected_fail=True))
        if betas:
            separation = enriched_min['sigma_u'] / max(min(betas), np.finfo(float).tiny)
            detected = degenerate >= 1 or separation >= INFSUP_SEPARATION
            result.add(CheckResult('infsup', 'sigma_u degeneracy of the unenriched element detected',
                                   float(separation), INFSUP_SEPARATION, bool(detected)))


def run_diagnostics(config: CaseConfig, suites: Optional[List[str]] = None,
                    cb_progress_increment: Optional[Callable] = None) -> DiagnosticsResult:
    """
    Runs the diagnostic suites on coarse meshes.

    :param config: Supplies the seed, the inf-sup refinement list, the pairs and the unenriched comparison flag
    :param suites: Subset of SUITES to run, all when omitted
    :param cb_progress_increment: Called once per finished suite
    :return: DiagnosticsResult with one CheckResult per measured quantity
    """
    selected = list(SUITES) if suites is None else list(suites)
    unknown = [s for s in selected if s not in SUITES]
    if unknown:
        raise R13Exception(f"Unknown diagnostic suites {unknown}, expected names from {SUITES}")
    rng = np.random.default_rng(config.seed)
    result = DiagnosticsResult()
    runners = {
        'duality': lambda: check_duality(result, rng),
        'stf3': lambda: check_stf3(result, rng),
        'right_inverse': lambda: check_right_inverses(result, rng),
        'kernel': lambda: check_kernels(result, rng),
        'symbol': lambda: check_symbol(result, config.seed),
        'projection': lambda: check_projection(result, rng),
        'interpolation': lambda: check_interpolation(result, rng),
        'infsup': lambda: check_infsup(result, config),
    }
    for suite in selected:
        logger.info("Running diagnostic suite %s", suite)
        runners[suite]()
        if cb_progress_increment is not None:
            cb_progress_increment()
    return result
