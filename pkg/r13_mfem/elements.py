"""
Reference element bases in barycentric coordinates, their degrees of freedom and the quadrature rules used to
integrate them.

Three scalar elements are provided: continuous P1 and P2 Lagrange, and the bubble-enriched 9-function space
P2 + b_K P1 whose basis is dual to vertex values, edge integrals and interior moments against the barycentric
coordinates.  Local numbering for P2 and the enriched space is vertices first, then the edge opposite each vertex,
then (enriched only) the interior moments.
"""
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from math import ceil
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

from r13_mfem.exceptions import DegenerateElementException, QuadratureException, R13Exception

MAX_QUADRATURE_DEGREE = 12
ASSEMBLY_DEGREE = 10
BOUNDARY_DEGREE = 6

REFERENCE_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric points (n, 3) with weights summing to 1, exact for polynomials up to degree"""
    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class EdgeQuadratureRule:
    """Parameters t in (0, 1) along an edge with weights summing to 1, exact up to degree"""
    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self) -> int:
        return len(self.weights)


def _check_degree(degree: int) -> None:
    if not 0 <= degree <= MAX_QUADRATURE_DEGREE:
        raise QuadratureException(f"Quadrature degree {degree} unsupported, must be 0..{MAX_QUADRATURE_DEGREE}")


@lru_cache(maxsize=None)
def quadrature(degree: int) -> QuadratureRule:
    """
    Triangle rule of the requested exactness from the collapsed-coordinate product of Gauss-Jacobi (alpha=1)
    and Gauss-Legendre points.

    :param degree: Required polynomial exactness, 0 to 12
    :return: The QuadratureRule
    """
    _check_degree(degree)
    m = max(1, int(ceil((degree + 1) / 2)))
    u, wu = leggauss(m)
    v, wv = roots_jacobi(m, 1.0, 0.0)
    uu, vv = np.meshgrid(u, v, indexing='ij')
    x = (1.0 + uu) * (1.0 - vv) / 4.0
    y = (1.0 + vv) / 2.0
    weights = np.outer(wu, wv).ravel() / 4.0
    points = np.stack([1.0 - x.ravel() - y.ravel(), x.ravel(), y.ravel()], axis=1)
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points, weights, degree)


@lru_cache(maxsize=None)
def edge_quadrature(degree: int) -> EdgeQuadratureRule:
    """Gauss-Legendre rule on (0, 1) of the requested exactness"""
    _check_degree(degree)
    m = max(1, int(ceil((degree + 1) / 2)))
    t, w = leggauss(m)
    points = 0.5 * (t + 1.0)
    weights = 0.5 * w
    points.setflags(write=False)
    weights.setflags(write=False)
    return EdgeQuadratureRule(points, weights, degree)


def edge_barycentric(local_edge: int, t: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of points at parameter t along local edge k, from vertex k+1 to vertex k+2"""
    t = np.asarray(t, dtype=float)
    bary = np.zeros(t.shape + (3,))
    bary[..., (local_edge + 1) % 3] = 1.0 - t
    bary[..., (local_edge + 2) % 3] = t
    return bary


class ScalarElement(Enum):
    """Scalar finite elements, valued by their local dimension"""
    P1 = 3
    P2 = 6
    P2B = 9

    @property
    def num_local(self) -> int:
        return self.value

    @property
    def has_edge_dofs(self) -> bool:
        return self != ScalarElement.P1

    @property
    def has_interior_dofs(self) -> bool:
        return self == ScalarElement.P2B


def _p1(bary: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    values = bary.copy()
    derivs = np.broadcast_to(np.eye(3), bary.shape[:-1] + (3, 3)).copy()
    return values, derivs


def _p2(bary: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    n = bary.shape[:-1]
    values = np.empty(n + (6,))
    derivs = np.zeros(n + (6, 3))
    for i in range(3):
        values[..., i] = bary[..., i] * (2.0 * bary[..., i] - 1.0)
        derivs[..., i, i] = 4.0 * bary[..., i] - 1.0
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        values[..., 3 + k] = 4.0 * bary[..., i] * bary[..., j]
        derivs[..., 3 + k, i] = 4.0 * bary[..., j]
        derivs[..., 3 + k, j] = 4.0 * bary[..., i]
    return values, derivs


def _enriched(bary: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # unscaled: edge functions still need 6/|e| and interior functions 1/|K|
    n = bary.shape[:-1]
    l0, l1, l2 = bary[..., 0], bary[..., 1], bary[..., 2]
    b = l0 * l1 * l2
    db = np.stack([l1 * l2, l0 * l2, l0 * l1], axis=-1)
    values = np.empty(n + (9,))
    derivs = np.zeros(n + (9, 3))
    for i in range(3):
        li = bary[..., i]
        values[..., i] = li * (3.0 * li - 2.0) + b * (24.0 - 42.0 * li)
        derivs[..., i, :] = db * (24.0 - 42.0 * li)[..., None]
        derivs[..., i, i] += 6.0 * li - 2.0 - 42.0 * b
    for k in range(3):
        i, j = (k + 1) % 3, (k + 2) % 3
        lk = bary[..., k]
        values[..., 3 + k] = bary[..., i] * bary[..., j] + b * (21.0 * lk - 12.0)
        derivs[..., 3 + k, :] = db * (21.0 * lk - 12.0)[..., None]
        derivs[..., 3 + k, i] += bary[..., j]
        derivs[..., 3 + k, j] += bary[..., i]
        derivs[..., 3 + k, k] += 21.0 * b
    for m in range(3):
        weights = np.full(3, -360.0)
        weights[m] = 900.0
        linear = bary @ weights
        values[..., 6 + m] = b * linear
        derivs[..., 6 + m, :] = db * linear[..., None] + b[..., None] * weights
    return values, derivs


_REFERENCE = {ScalarElement.P1: _p1, ScalarElement.P2: _p2, ScalarElement.P2B: _enriched}


def reference_basis(element: ScalarElement, bary) -> Tuple[np.ndarray, np.ndarray]:
    """
    Unscaled basis values (..., k) and derivatives with respect to the three barycentric coordinates (..., k, 3).
    """
    return _REFERENCE[element](np.asarray(bary, dtype=float))


def element_scales(element: ScalarElement, areas: np.ndarray, edge_lengths: np.ndarray) -> np.ndarray:
    """Per-element basis scaling (T, k): 6/|e| on enriched edge functions, 1/|K| on enriched interior functions"""
    scales = np.ones((len(areas), element.num_local))
    if element == ScalarElement.P2B:
        scales[:, 3:6] = 6.0 / edge_lengths
        scales[:, 6:9] = 1.0 / areas[:, None]
    return scales


def physical_basis(element: ScalarElement, bary, scales: np.ndarray,
                   bary_gradients: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Basis values and physical gradients on a batch of triangles at shared barycentric points.

    :param element: The scalar element
    :param bary: Barycentric points (n, 3)
    :param scales: Per-element scaling (T, k) from element_scales
    :param bary_gradients: Barycentric coordinate gradients (T, 3, 2)
    :return: Tuple of values (T, n, k) and gradients (T, n, k, 2)
    """
    values, derivs = reference_basis(element, bary)
    phys_values = scales[:, None, :] * values[None, :, :]
    gradients = np.einsum('qal,tld->tqad', derivs, bary_gradients) * scales[:, None, :, None]
    return phys_values, gradients


class TriangleGeometry:
    """Affine geometry of one triangle: area, barycentric gradients, edge lengths and coordinate maps"""

    def __init__(self, vertices):
        self.vertices = np.asarray(vertices, dtype=float).reshape(3, 2)
        d1 = self.vertices[1] - self.vertices[0]
        d2 = self.vertices[2] - self.vertices[0]
        self.area = 0.5 * (d1[0] * d2[1] - d1[1] * d2[0])
        scale = max(np.abs(d1).max(), np.abs(d2).max(), 1e-300)
        if self.area <= 1e-14 * scale * scale:
            raise DegenerateElementException(f"Degenerate or clockwise triangle, signed area {self.area:.3e}")
        p = self.vertices
        self.bary_gradients = np.empty((3, 2))
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            self.bary_gradients[i] = [(p[j, 1] - p[k, 1]) / (2 * self.area), (p[k, 0] - p[j, 0]) / (2 * self.area)]
        self.edge_lengths = np.array([np.linalg.norm(p[(k + 2) % 3] - p[(k + 1) % 3]) for k in range(3)])

    def to_physical(self, bary) -> np.ndarray:
        return np.asarray(bary, dtype=float) @ self.vertices

    def to_barycentric(self, points) -> np.ndarray:
        offset = np.asarray(points, dtype=float).reshape(-1, 2) - self.vertices.mean(axis=0)
        return 1.0 / 3.0 + offset @ self.bary_gradients.T

    def scales(self, element: ScalarElement) -> np.ndarray:
        return element_scales(element, np.array([self.area]), self.edge_lengths[None, :])[0]


def _evaluate_on(element: ScalarElement, bary, vertices) -> Tuple[np.ndarray, np.ndarray]:
    geometry = TriangleGeometry(REFERENCE_VERTICES if vertices is None else vertices)
    bary = np.atleast_2d(np.asarray(bary, dtype=float))
    if np.any(bary < -1e-12) or np.any(np.abs(bary.sum(axis=1) - 1.0) > 1e-12):
        raise R13Exception("Barycentric coordinates must be nonnegative and sum to 1")
    values, gradients = physical_basis(element, bary, geometry.scales(element)[None, :],
                                       geometry.bary_gradients[None, :, :])
    return values[0], gradients[0]


def eval_enriched_basis(bary, vertices=None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Evaluates the 9 enriched scalar basis functions: 3 nodal, 3 edge (edge k opposite vertex k), 3 interior.

    :param bary: Barycentric point(s), shape (3,) or (n, 3)
    :param vertices: Triangle vertices (3, 2); the reference triangle (0,0), (1,0), (0,1) when omitted
    :return: Tuple of values (n, 9) and physical gradients (n, 9, 2)
    """
    return _evaluate_on(ScalarElement.P2B, bary, vertices)


def eval_lagrange_basis(degree: int, bary, vertices=None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Evaluates the nodal P1 or P2 basis.

    :param degree: 1 or 2
    :param bary: Barycentric point(s), shape (3,) or (n, 3)
    :param vertices: Triangle vertices (3, 2); the reference triangle when omitted
    :return: Tuple of values (n, k) and physical gradients (n, k, 2)
    """
    if degree == 1:
        return _evaluate_on(ScalarElement.P1, bary, vertices)
    if degree == 2:
        return _evaluate_on(ScalarElement.P2, bary, vertices)
    raise R13Exception(f"Lagrange basis degree must be 1 or 2, got {degree}")


def lagrange_nodes(element: ScalarElement) -> np.ndarray:
    """Barycentric coordinates of the nodes of a Lagrange element"""
    if element == ScalarElement.P1:
        return np.eye(3)
    if element == ScalarElement.P2:
        midpoints = [edge_barycentric(k, 0.5) for k in range(3)]
        return np.vstack([np.eye(3), midpoints])
    raise R13Exception("The enriched element is not nodal")


class DofFunctionals:
    """
    The 9 local functionals of the enriched element on one triangle: values at the three vertices, integrals
    over the three edges (edge k opposite vertex k) and moments against the three barycentric coordinates.
    """

    def __init__(self, vertices, degree: int = ASSEMBLY_DEGREE):
        self.geometry = TriangleGeometry(vertices)
        self.rule = quadrature(degree)
        self.edge_rule = edge_quadrature(degree)

    def apply(self, func: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """
        :param func: Callable mapping physical points (n, 2) to values (n,) or (n, c)
        :return: Array (9,) or (9, c) of functional values
        """
        g = self.geometry
        rows = [np.asarray(func(g.vertices), dtype=float)]
        edge_values = []
        for k in range(3):
            points = g.to_physical(edge_barycentric(k, self.edge_rule.points))
            values = np.asarray(func(points), dtype=float)
            edge_values.append(g.edge_lengths[k] * np.tensordot(self.edge_rule.weights, values, axes=1))
        rows.append(np.stack(edge_values))
        points = g.to_physical(self.rule.points)
        values = np.asarray(func(points), dtype=float)
        moments = g.area * np.tensordot(self.rule.weights[:, None] * self.rule.points, values, axes=(0, 0))
        rows.append(moments)
        return np.concatenate(rows, axis=0)

    def duality_matrix(self) -> np.ndarray:
        """Functionals (rows) applied to the enriched basis functions (columns); the identity for a dual pair"""
        g = self.geometry

        def basis(points):
            return eval_enriched_basis(np.clip(g.to_barycentric(points), 0.0, 1.0), g.vertices)[0]

        return self.apply(basis)


def dof_functionals(vertices, degree: int = ASSEMBLY_DEGREE) -> DofFunctionals:
    return DofFunctionals(vertices, degree)


class LocalTensorBasis:
    """
    The 27 shape functions of the symmetric tensor element on one triangle: each enriched scalar function
    replicated into the components (s11, s12, s22).  Index c * 9 + a is scalar function a in component c.
    """
    dimension = 27

    def __init__(self, vertices):
        self.geometry = TriangleGeometry(vertices)

    def evaluate(self, bary) -> Tuple[np.ndarray, np.ndarray]:
        """
        :param bary: Barycentric points (n, 3)
        :return: Tuple of component values (n, 27, 3) and component gradients (n, 27, 3, 2)
        """
        values, gradients = eval_enriched_basis(bary, self.geometry.vertices)
        n = values.shape[0]
        tensor_values = np.zeros((n, 3, 9, 3))
        tensor_gradients = np.zeros((n, 3, 9, 3, 2))
        for c in range(3):
            tensor_values[:, c, :, c] = values
            tensor_gradients[:, c, :, c, :] = gradients
        return tensor_values.reshape(n, 27, 3), tensor_gradients.reshape(n, 27, 3, 2)

    def duality_matrix(self, degree: int = ASSEMBLY_DEGREE) -> np.ndarray:
        """27 x 27 functionals-by-functions matrix; functionals act component-wise"""
        functionals = DofFunctionals(self.geometry.vertices, degree)
        g = self.geometry

        def basis(points):
            return self.evaluate(np.clip(g.to_barycentric(points), 0.0, 1.0))[0].reshape(len(points), -1)

        scalar = functionals.apply(basis).reshape(9, 27, 3)
        matrix = np.zeros((27, 27))
        for c in range(3):
            matrix[c * 9:(c + 1) * 9, :] = scalar[:, :, c]
        return matrix


def local_tensor_basis(vertices) -> LocalTensorBasis:
    return LocalTensorBasis(vertices)


def sym_grad_rank(vertices: Optional[np.ndarray] = None) -> int:
    """
    Rank of the map from P2 vector fields on a triangle to P1 symmetric tensors under the symmetric gradient.
    Rigid motions span its kernel, so full rank 9 means every P1 symmetric tensor is a symmetric gradient.
    """
    nodes = np.eye(3)
    _, gradients = eval_lagrange_basis(2, nodes, vertices)
    columns = []
    for i in range(2):
        for a in range(6):
            grad = np.zeros((3, 2, 2))
            grad[:, i, :] = gradients[:, a, :]
            sym = 0.5 * (grad + np.swapaxes(grad, 1, 2))
            columns.append(np.stack([sym[:, 0, 0], sym[:, 0, 1], sym[:, 1, 1]], axis=1).ravel())
    return int(np.linalg.matrix_rank(np.stack(columns, axis=1), tol=1e-10))
