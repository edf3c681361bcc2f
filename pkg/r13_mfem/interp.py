"""
The trace-preserving interpolation into the enriched symmetric tensor space with zero boundary trace.

Vertex and edge DoFs are averages over the vertex and edge patches of the local L2 projections; interior DoFs are
the moments of the field itself; every DoF on the boundary is zero.
"""
import logging
from typing import Callable

import numpy as np

from r13_mfem.elements import ASSEMBLY_DEGREE, ScalarElement, TriangleGeometry, eval_enriched_basis, quadrature
from r13_mfem.exceptions import DegenerateElementException
from r13_mfem.mesh import Mesh
from r13_mfem.spaces import FieldSpace

logger = logging.getLogger(__name__)

TensorField = Callable[[np.ndarray], np.ndarray]


def _field_values(tau: TensorField, points: np.ndarray) -> np.ndarray:
    values = np.asarray(tau(points.reshape(-1, 2)), dtype=float)
    return values.reshape(points.shape[:-1] + (3,))


def local_l2_projection(vertices, tau: TensorField, degree: int = ASSEMBLY_DEGREE) -> np.ndarray:
    """
    L2 projection of a symmetric tensor field onto the 27-dimensional local space P2 + b_K P1 of one triangle.

    :param vertices: Triangle vertices (3, 2)
    :param tau: Maps points (n, 2) to stored components (n, 3) = (t11, t12, t22)
    :param degree: Quadrature exactness
    :return: Local coefficients (27,), index c * 9 + a
    """
    geometry = TriangleGeometry(vertices)
    rule = quadrature(degree)
    values, _ = eval_enriched_basis(rule.points, geometry.vertices)
    weights = geometry.area * rule.weights
    gram = np.einsum('q,qa,qb->ab', weights, values, values)
    loads = np.einsum('q,qa,qc->ac', weights, values, _field_values(tau, geometry.to_physical(rule.points)))
    try:
        coefficients = np.linalg.solve(gram, loads)
    except np.linalg.LinAlgError:
        raise DegenerateElementException("Singular local Gram matrix in the L2 projection") from None
    return coefficients.T.ravel()


class InterpolationContext:
    """
    Patch structure of a mesh for the interpolation: the enriched tensor space, the number of triangles sharing each
    vertex and edge, and the batched local Gram matrices.
    """

    def __init__(self, mesh: Mesh, degree: int = ASSEMBLY_DEGREE):
        self.mesh = mesh
        self.degree = degree
        self.space = FieldSpace(mesh, ScalarElement.P2B, 3, 'sigma')
        self.vertex_patch_sizes = mesh.vertex_triangle_counts
        self.edge_patch_sizes = mesh.edge_counts
        values, _ = self.space.tabulate(degree)
        _, weights = self.space.quadrature_points(degree)
        self.local_grams = np.einsum('tq,tqa,tqb->tab', weights, values, values)
        if not np.all(np.isfinite(np.linalg.cond(self.local_grams))):
            raise DegenerateElementException("Singular local Gram matrix in the interpolation context")
        scalar = np.zeros(self.space.num_scalar)
        scalar[:mesh.num_vertices] = self.vertex_patch_sizes
        scalar[mesh.num_vertices:mesh.num_vertices + mesh.num_edges] = self.edge_patch_sizes
        self._patch_sizes = scalar

    def projections(self, tau: TensorField) -> np.ndarray:
        """Local L2 projections on every triangle, shape (T, 3, 9)"""
        values, _ = self.space.tabulate(self.degree)
        points, weights = self.space.quadrature_points(self.degree)
        loads = np.einsum('tq,tqa,tqc->tac', weights, values, _field_values(tau, points))
        return np.linalg.solve(self.local_grams, loads).transpose(0, 2, 1)

    def interpolate(self, tau: TensorField) -> np.ndarray:
        mesh, space = self.mesh, self.space
        projected = self.projections(tau)
        num_patch = mesh.num_vertices + mesh.num_edges
        # the dual basis makes the first six local coefficients the vertex values and edge integrals
        scalar = np.zeros((3, space.num_scalar))
        patch_dofs = space.cell_scalar_dofs[:, :6]
        for c in range(3):
            scalar[c, :num_patch] = np.bincount(patch_dofs.ravel(), weights=projected[:, c, :6].ravel(),
                                                minlength=num_patch)
        scalar[:, :num_patch] /= self._patch_sizes[:num_patch]
        interior = space.interior_scalar_dofs()
        exact = space.interpolate(tau).reshape(3, space.num_scalar)
        scalar[:, interior] = exact[:, interior]
        scalar[:, space.boundary_scalar_dofs()] = 0.0
        return scalar.ravel()


def interpolate(ctx: InterpolationContext, tau: TensorField) -> np.ndarray:
    """
    Interpolates a symmetric tensor field with zero boundary trace into the enriched space.

    :param ctx: The interpolation context of the mesh
    :param tau: Maps points (n, 2) to stored components (n, 3); expected to vanish on the boundary
    :return: Global coefficients in the numbering of ctx.space
    """
    coefficients = ctx.interpolate(tau)
    logger.debug("Interpolated tensor field onto %d DoFs", len(coefficients))
    return coefficients
