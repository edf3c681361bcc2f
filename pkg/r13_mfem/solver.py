"""
Linear solves of the assembled saddle-point system, the minimum-norm fallback used for singular element choices,
and dense stability diagnostics (discrete inf-sup constants and the coercivity witness on the kernel of B).
"""
import logging
from dataclasses import dataclass, field
from time import perf_counter
from typing import Dict, Optional

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import splu

from r13_mfem.assembly import BlockSystem, DofMap, assemble_volume_forms
from r13_mfem.exceptions import AssemblyException, DimensionCapException, R13Exception, SingularSystemException
from r13_mfem.mesh import Mesh
from r13_mfem.spaces import ElementPreset, FEFunction
from r13_mfem.tensorops import DEFAULT_SEED

logger = logging.getLogger(__name__)

RESIDUAL_TOLERANCE = 1e-9
PIVOT_RATIO_TOLERANCE = 1e-13
DENSE_DIMENSION_CAP = 20000
FILL_ORDERING = 'MMD_AT_PLUS_A'
DIAGONAL_PIVOT_THRESHOLD = 0.1
NEAR_NULL_RELATIVE = 1e-10
INFSUP_PAIRS = ('sigma_u', 's_theta', 'u_p')


def _relative_residual(matrix: sparse.spmatrix, x: np.ndarray, rhs: np.ndarray) -> float:
    scale = max(np.linalg.norm(rhs), np.finfo(float).tiny)
    return float(np.linalg.norm(matrix @ x - rhs) / scale)


class Solution:
    """Discrete fields of one solve with its metadata; the coefficient vector is not modified after creation"""

    def __init__(self, system: BlockSystem, vector: np.ndarray, residual: float, method: str,
                 pivot_report: Optional[Dict[str, float]] = None):
        self.system = system
        self.vector = vector
        self.vector.setflags(write=False)
        self.residual = residual
        self.method = method
        self.pivot_report = pivot_report or {}
        self.fields: Dict[str, FEFunction] = system.functions(np.array(vector))
        self.multiplier = float(vector[system.dofmap.multiplier_index])

    def __getitem__(self, name: str) -> FEFunction:
        return self.fields[name]

    @property
    def sigma(self) -> FEFunction:
        return self.fields['sigma']

    @property
    def s(self) -> FEFunction:
        return self.fields['s']

    @property
    def p(self) -> FEFunction:
        return self.fields['p']

    @property
    def u(self) -> FEFunction:
        return self.fields['u']

    @property
    def theta(self) -> FEFunction:
        return self.fields['theta']

    @property
    def mesh(self) -> Mesh:
        return self.system.mesh

    @property
    def kn(self) -> float:
        return self.system.kn

    def pressure_mean(self) -> float:
        """The integral of the discrete pressure, zero up to round-off"""
        return float(self.system.dofmap.spaces['p'].integral_vector() @ self.p.coefficients)

    def describe(self) -> str:
        response = f"Solution via {self.method}: relative residual {self.residual:.3e}"
        if self.pivot_report:
            response += ", pivots " + ", ".join(f"{k}={v:.3e}" for k, v in self.pivot_report.items())
        return response


def _factorize(matrix: sparse.spmatrix, diag_pivot_thresh: float = DIAGONAL_PIVOT_THRESHOLD):
    """SuperLU factorization under a minimum-degree ordering of A + A^T with diagonal-preferring pivoting"""
    return splu(matrix.tocsc(), permc_spec=FILL_ORDERING, diag_pivot_thresh=diag_pivot_thresh,
                options={'SymmetricMode': True})


def pinned_pressure_index(system: BlockSystem) -> int:
    """The pressure unknown fixed to zero when the mean multiplier is eliminated"""
    return system.dofmap.offsets['p']


def solve(system: BlockSystem) -> Solution:
    """
    Direct sparse LU solve.  Pressure enters the equations only through its gradient, so the mean constraint is
    eliminated: one pressure unknown is pinned to zero together with its equation, the reduced matrix is factorized
    and the pressure is shifted to zero mean afterwards.  The multiplier of the monolithic system is zero.  The
    residual is measured against the full monolithic system.

    :param system: The assembled system
    :return: The Solution
    :raises SingularSystemException: if the factorization breaks down, the pivots degenerate or the residual check
                                     fails; the exception carries the pivot report
    """
    start = perf_counter()
    dofmap = system.dofmap
    pinned = pinned_pressure_index(system)
    keep = np.ones(system.size, dtype=bool)
    keep[[pinned, dofmap.multiplier_index]] = False
    reduced = system.matrix[keep][:, keep].tocsc()
    try:
        factor = _factorize(reduced)
    except RuntimeError as e:
        raise SingularSystemException(f"Sparse LU failed for the {system.preset.value} system: {e}",
                                      {'size': float(system.size)}) from None
    pivots = np.abs(factor.U.diagonal())
    report = {'min_pivot': float(pivots.min()), 'max_pivot': float(pivots.max())}
    report['pivot_ratio'] = report['min_pivot'] / max(report['max_pivot'], np.finfo(float).tiny)
    report['fill'] = (factor.L.nnz + factor.U.nnz) / max(reduced.nnz, 1)
    x = np.zeros(system.size)
    x[keep] = factor.solve(system.rhs[keep])
    if not np.all(np.isfinite(x)):
        raise SingularSystemException("Sparse LU produced a non-finite solution", report)
    weights = dofmap.spaces['p'].integral_vector()
    p = dofmap.field_slice('p')
    x[p] -= (weights @ x[p]) / weights.sum()
    residual = _relative_residual(system.matrix, x, system.rhs)
    report['residual'] = residual
    logger.debug("LU solve of %d unknowns in %.2f s, %s", system.size, perf_counter() - start, report)
    if report['pivot_ratio'] < PIVOT_RATIO_TOLERANCE:
        raise SingularSystemException(
            f"Pivot ratio {report['pivot_ratio']:.3e} of the {system.preset.value} system signals a singular matrix",
            report
        )
    if residual > RESIDUAL_TOLERANCE:
        raise SingularSystemException(f"Relative residual {residual:.3e} above {RESIDUAL_TOLERANCE}", report)
    return Solution(system, x, residual, 'lu', report)


def _tikhonov(matrix: sparse.csr_matrix, rhs: np.ndarray, iterations: int = 30) -> np.ndarray:
    # iterated Tikhonov from zero converges to the minimum-norm least-squares solution
    normal = (matrix.T @ matrix).tocsc()
    alpha = 1e-8 * max(abs(normal.diagonal()).max(), 1.0)
    factor = _factorize(normal + alpha * sparse.identity(normal.shape[0], format='csc'), diag_pivot_thresh=0.0)
    projected = matrix.T @ rhs
    x = np.zeros(matrix.shape[1])
    for _ in range(iterations):
        x = factor.solve(projected + alpha * x)
    return x


def solve_min_norm(system: BlockSystem, dense_cap: int = DENSE_DIMENSION_CAP,
                   allow_iterative: bool = True) -> Solution:
    """
    Minimum-norm least-squares solution, for systems that may be singular.

    Dense SVD-based least squares below the dimension cap; iterated Tikhonov regularization above it when allowed.
    The reported residual is the relative normal-equation residual, which measures the consistent part.

    :param system: The assembled system
    :param dense_cap: Largest size handed to the dense solver
    :param allow_iterative: If False, systems above the cap raise DimensionCapException
    :return: The Solution
    """
    start = perf_counter()
    if system.size <= dense_cap:
        x, _, rank, _ = linalg.lstsq(system.matrix.toarray(), system.rhs, lapack_driver='gelsd')
        method = 'lstsq'
        logger.debug("Dense least squares on %d unknowns, numerical rank %d", system.size, rank)
    elif allow_iterative:
        x = _tikhonov(system.matrix, system.rhs)
        method = 'tikhonov'
    else:
        raise DimensionCapException(f"Minimum-norm solve of {system.size} unknowns exceeds the cap of {dense_cap}")
    if not np.all(np.isfinite(x)):
        raise R13Exception("Minimum-norm solve produced a non-finite solution")
    projected = system.matrix.T @ system.rhs
    scale = max(np.linalg.norm(projected), np.finfo(float).tiny)
    consistent = float(np.linalg.norm(system.matrix.T @ (system.matrix @ x - system.rhs)) / scale)
    full = _relative_residual(system.matrix, x, system.rhs)
    logger.debug("Minimum-norm solve (%s) in %.2f s: residual %.3e, normal residual %.3e",
                 method, perf_counter() - start, full, consistent)
    return Solution(system, x, consistent, method, {'residual': full, 'normal_residual': consistent})


@dataclass
class InfSupReport:
    """Discrete inf-sup constant of one pair on one mesh"""
    pair: str
    preset: str
    h: float
    beta: float
    near_null: int
    largest: float
    dimension: int
    values: np.ndarray = field(repr=False, default=None)

    def describe(self) -> str:
        return f"{self.pair} ({self.preset}) h={self.h:.4g}: beta={self.beta:.6g}, near-null {self.near_null}," \
               f" largest {self.largest:.4g}, dimension {self.dimension}"


def _dense_gram(matrix: sparse.spmatrix) -> np.ndarray:
    dense = matrix.toarray()
    return 0.5 * (dense + dense.T)


def _cholesky(matrix: np.ndarray, what: str):
    try:
        return linalg.cho_factor(matrix)
    except linalg.LinAlgError:
        raise AssemblyException(f"Gram matrix of {what} is not positive definite") from None


def generalized_singular_values(coupling: np.ndarray, inf_gram: np.ndarray, sup_gram: np.ndarray) -> np.ndarray:
    """
    Values beta_i with beta_i^2 the eigenvalues of (B M_sup^-1 B^T) w = beta^2 M_inf w, ascending.

    :param coupling: Dense B, rows in the inf space and columns in the sup space
    :param inf_gram: SPD Gram matrix of the inf space
    :param sup_gram: SPD Gram matrix of the sup space
    """
    factor = _cholesky(sup_gram, 'the sup space')
    schur = coupling @ linalg.cho_solve(factor, coupling.T)
    _cholesky(inf_gram, 'the inf space')
    eigenvalues = linalg.eigh(0.5 * (schur + schur.T), inf_gram, eigvals_only=True)
    return np.sqrt(np.clip(eigenvalues, 0.0, None))


def infsup_constant(mesh: Mesh, pair: str, preset: ElementPreset,
                    dimension_cap: int = DENSE_DIMENSION_CAP) -> InfSupReport:
    """
    Discrete inf-sup constant of one of the coupling pairs:

    * sigma_u: inf over u in L2, sup over sigma in H1, coupling (div sigma, u)
    * s_theta: inf over theta in L2, sup over s in H1, coupling (theta, div s)
    * u_p: inf over zero-mean p in the H1 seminorm, sup over u in L2, coupling (u, grad p)

    :param mesh: The mesh
    :param pair: Pair id
    :param preset: The element preset selecting the spaces
    :param dimension_cap: Largest combined dimension handled by the dense eigensolver
    :return: InfSupReport with the smallest non-degenerate value as beta
    """
    if pair not in INFSUP_PAIRS:
        raise R13Exception(f"Unknown inf-sup pair '{pair}', expected one of {INFSUP_PAIRS}")
    dofmap = DofMap(mesh, preset)
    spaces = dofmap.spaces
    inf_name, sup_name = {'sigma_u': ('u', 'sigma'), 's_theta': ('theta', 's'), 'u_p': ('p', 'u')}[pair]
    dimension = spaces[inf_name].dim + spaces[sup_name].dim
    if dimension > dimension_cap:
        raise DimensionCapException(f"Inf-sup pair {pair} has dimension {dimension}, above the cap {dimension_cap}")
    forms = assemble_volume_forms(dofmap, kn=1.0)
    if pair == 'sigma_u':
        coupling = forms['e'].toarray()
        inf_gram = _dense_gram(spaces['u'].gram_matrix('L2'))
        sup_gram = _dense_gram(spaces['sigma'].gram_matrix('H1'))
    elif pair == 's_theta':
        coupling = forms['b'].T.toarray()
        inf_gram = _dense_gram(spaces['theta'].gram_matrix('L2'))
        sup_gram = _dense_gram(spaces['s'].gram_matrix('H1'))
    else:
        zero_mean = linalg.null_space(spaces['p'].integral_vector()[None, :])
        coupling = zero_mean.T @ forms['g'].T.toarray()
        inf_gram = zero_mean.T @ _dense_gram(spaces['p'].gram_matrix('H1_SEMI')) @ zero_mean
        sup_gram = _dense_gram(spaces['u'].gram_matrix('L2'))
    values = generalized_singular_values(coupling, inf_gram, sup_gram)
    largest = float(values.max()) if values.size else 0.0
    degenerate = values < NEAR_NULL_RELATIVE * largest
    near_null = int(np.count_nonzero(degenerate))
    beta = float(values[~degenerate].min()) if np.any(~degenerate) else 0.0
    report = InfSupReport(pair, preset.value, mesh.h_max, beta, near_null, largest, dimension, values)
    logger.debug(report.describe())
    return report


@dataclass
class CoercivityReport:
    """Rayleigh quotients of the A block on the discrete kernel of B"""
    kernel_dimension: int
    samples: int
    min_sampled: float
    exact_min: float
    all_positive: bool

    def describe(self) -> str:
        return f"kernel dimension {self.kernel_dimension}, {self.samples} samples: min sampled quotient" \
               f" {self.min_sampled:.6g}, exact minimum {self.exact_min:.6g}, positive {self.all_positive}"


def coercivity_witness(system: BlockSystem, samples: int = 50, seed: int = DEFAULT_SEED,
                       dimension_cap: int = DENSE_DIMENSION_CAP) -> CoercivityReport:
    """
    Checks S^T A S > 0 on the kernel of B (together with the zero-mean pressure constraint), measuring the
    quotient against the norm ||sigma||_1^2 + ||s||_1^2 + ||p||_0^2.

    :param system: An assembled system, coarse enough for dense linear algebra
    :param samples: Number of random kernel members
    :param seed: Random seed
    :return: CoercivityReport with the sampled and the exact minimum quotient
    """
    dofmap = system.dofmap
    primal = system.primal_slice()
    size = primal.stop
    if size > dimension_cap:
        raise DimensionCapException(f"Coercivity witness on {size} unknowns exceeds the cap {dimension_cap}")
    mean_row = np.zeros((1, size))
    mean_row[0, dofmap.field_slice('p')] = dofmap.spaces['p'].integral_vector()
    constraint = np.vstack([system.b_block().toarray(), mean_row])
    kernel = linalg.null_space(constraint)
    a_dense = system.a_block().toarray()
    a_sym = 0.5 * (a_dense + a_dense.T)
    norm = linalg.block_diag(
        _dense_gram(dofmap.spaces['sigma'].gram_matrix('H1')),
        _dense_gram(dofmap.spaces['s'].gram_matrix('H1')),
        _dense_gram(dofmap.spaces['p'].gram_matrix('L2')),
    )
    if kernel.shape[1] == 0:
        return CoercivityReport(0, 0, np.inf, np.inf, True)
    rng = np.random.default_rng(seed)
    members = kernel @ rng.standard_normal((kernel.shape[1], samples))
    quotients = np.einsum('is,ij,js->s', members, a_sym, members) / np.einsum('is,ij,js->s', members, norm, members)
    reduced_a = kernel.T @ a_sym @ kernel
    reduced_norm = kernel.T @ norm @ kernel
    exact = linalg.eigh(0.5 * (reduced_a + reduced_a.T), 0.5 * (reduced_norm + reduced_norm.T), eigvals_only=True)
    report = CoercivityReport(kernel.shape[1], samples, float(quotients.min()), float(exact.min()),
                              bool(np.all(quotients > 0.0)))
    logger.debug("Coercivity witness: %s", report.describe())
    return report
