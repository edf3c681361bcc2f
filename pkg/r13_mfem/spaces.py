import logging
from enum import Enum
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy import sparse

from r13_mfem.elements import (
    ASSEMBLY_DEGREE, ScalarElement, edge_barycentric, edge_quadrature, element_scales, physical_basis,
    quadrature, reference_basis
)
from r13_mfem.exceptions import R13Exception
from r13_mfem.mesh import Mesh

logger = logging.getLogger(__name__)

FIELD_NAMES = ('sigma', 's', 'p', 'u', 'theta')
FIELD_COMPONENTS = {'sigma': 3, 's': 2, 'p': 1, 'u': 2, 'theta': 1}
# Frobenius weights of the stored components; sigma stores (s11, s12, s22) with the off-diagonal counted twice
FIELD_COMPONENT_WEIGHTS = {'sigma': (1.0, 2.0, 1.0), 's': (1.0, 1.0), 'p': (1.0,), 'u': (1.0, 1.0), 'theta': (1.0,)}
FIELD_COMPONENT_NAMES = {
    'sigma': ('sigma_xx', 'sigma_xy', 'sigma_yy'), 's': ('s_x', 's_y'), 'p': ('p',), 'u': ('u_x', 'u_y'),
    'theta': ('theta',)
}


class ElementPreset(Enum):
    """Element choices for the five fields, valued by their unique string"""
    Enriched = 'enriched'
    EqualOrder = 'equal_order'
    TaylorHood = 'taylor_hood'

    @staticmethod
    def from_string(name: str) -> 'ElementPreset':
        for preset in ElementPreset:
            if preset.value == name:
                return preset
        raise R13Exception(f"Unknown element preset '{name}', expected one of {[p.value for p in ElementPreset]}")

    def element_for(self, field_name: str) -> ScalarElement:
        return PRESET_ELEMENTS[self][field_name]


PRESET_ELEMENTS: Dict[ElementPreset, Dict[str, ScalarElement]] = {
    ElementPreset.Enriched: {
        'sigma': ScalarElement.P2B, 'u': ScalarElement.P2, 'p': ScalarElement.P1, 's': ScalarElement.P2,
        'theta': ScalarElement.P1
    },
    ElementPreset.EqualOrder: {
        'sigma': ScalarElement.P2, 'u': ScalarElement.P2, 'p': ScalarElement.P1, 's': ScalarElement.P2,
        'theta': ScalarElement.P1
    },
    ElementPreset.TaylorHood: {
        'sigma': ScalarElement.P2, 'u': ScalarElement.P1, 'p': ScalarElement.P1, 's': ScalarElement.P2,
        'theta': ScalarElement.P1
    },
}


class FieldSpace:
    """
    Global numbering of one field on a mesh.  Scalar DoFs are numbered vertices first, then edges, then the three
    interior moments of every triangle; components are stacked component-major, so DoF c * num_scalar + i is
    scalar DoF i of component c.
    """

    def __init__(self, mesh: Mesh, element: ScalarElement, components: int = 1, name: str = ''):
        self.mesh = mesh
        self.element = element
        self.components = components
        self.name = name
        self.component_weights = np.array(FIELD_COMPONENT_WEIGHTS.get(name, (1.0,) * components))
        num_vertices, num_edges = mesh.num_vertices, mesh.num_edges
        blocks = [mesh.triangles]
        self.num_scalar = num_vertices
        if element.has_edge_dofs:
            blocks.append(num_vertices + mesh.triangle_edges)
            self.num_scalar += num_edges
        if element.has_interior_dofs:
            interior = num_vertices + num_edges + 3 * np.arange(mesh.num_triangles)[:, None] + np.arange(3)
            blocks.append(interior)
            self.num_scalar += 3 * mesh.num_triangles
        self.cell_scalar_dofs = np.hstack(blocks)
        self.cell_dofs = np.hstack([c * self.num_scalar + self.cell_scalar_dofs for c in range(components)])
        self.scales = element_scales(element, mesh.areas, mesh.local_edge_lengths)
        self._tabulated: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}

    def __repr__(self) -> str:
        return f"FieldSpace({self.name or 'field'}, {self.element.name} x {self.components}, dim={self.dim})"

    @property
    def dim(self) -> int:
        return self.components * self.num_scalar

    @property
    def num_local(self) -> int:
        return self.element.num_local

    def tabulate(self, degree: int = ASSEMBLY_DEGREE) -> Tuple[np.ndarray, np.ndarray]:
        """Scalar basis values (T, q, k) and gradients (T, q, k, 2) at the points of the triangle rule"""
        if degree not in self._tabulated:
            rule = quadrature(degree)
            self._tabulated[degree] = physical_basis(self.element, rule.points, self.scales,
                                                     self.mesh.bary_gradients)
        return self._tabulated[degree]

    def quadrature_points(self, degree: int = ASSEMBLY_DEGREE) -> Tuple[np.ndarray, np.ndarray]:
        """Physical quadrature points (T, q, 2) and weights times area (T, q)"""
        rule = quadrature(degree)
        points = np.einsum('ql,tld->tqd', rule.points, self.mesh.vertices[self.mesh.triangles])
        return points, self.mesh.areas[:, None] * rule.weights[None, :]

    def boundary_scalar_dofs(self) -> np.ndarray:
        """Scalar DoFs attached to boundary vertices or boundary edges"""
        dofs = [np.nonzero(self.mesh.boundary_vertex_mask)[0]]
        if self.element.has_edge_dofs:
            dofs.append(self.mesh.num_vertices + self.mesh.boundary_edges)
        return np.concatenate(dofs)

    def boundary_dofs(self) -> np.ndarray:
        scalar = self.boundary_scalar_dofs()
        return np.concatenate([c * self.num_scalar + scalar for c in range(self.components)])

    def interior_scalar_dofs(self) -> np.ndarray:
        """Scalar DoFs of the interior moments (enriched element only)"""
        if not self.element.has_interior_dofs:
            return np.zeros(0, dtype=np.int64)
        start = self.mesh.num_vertices + self.mesh.num_edges
        return np.arange(start, self.num_scalar)

    def interpolate(self, func: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """
        Canonical interpolation of a field given as a callable of physical points: nodal values for Lagrange
        elements; vertex values, edge integrals and interior moments for the enriched element.
        Reproduces every member of the discrete space.

        :param func: Maps points (n, 2) to values (n, components), or (n,) for scalar fields
        :return: Coefficient vector of length dim
        """
        mesh = self.mesh

        def evaluate(points):
            values = np.asarray(func(points.reshape(-1, 2)), dtype=float)
            return values.reshape(points.shape[:-1] + (self.components,))

        scalar = np.zeros((self.num_scalar, self.components))
        scalar[:mesh.num_vertices] = evaluate(mesh.vertices)
        if self.element.has_edge_dofs:
            start, stop = mesh.vertices[mesh.edges[:, 0]], mesh.vertices[mesh.edges[:, 1]]
            if self.element == ScalarElement.P2:
                edge_values = evaluate(0.5 * (start + stop))
            else:
                rule = edge_quadrature(ASSEMBLY_DEGREE)
                points = start[:, None, :] * (1.0 - rule.points)[None, :, None] + \
                    stop[:, None, :] * rule.points[None, :, None]
                lengths = np.linalg.norm(stop - start, axis=1)
                edge_values = lengths[:, None] * np.einsum('q,eqc->ec', rule.weights, evaluate(points))
            scalar[mesh.num_vertices:mesh.num_vertices + mesh.num_edges] = edge_values
        if self.element.has_interior_dofs:
            rule = quadrature(ASSEMBLY_DEGREE)
            points, weights = self.quadrature_points(ASSEMBLY_DEGREE)
            moments = np.einsum('tq,qm,tqc->tmc', weights, rule.points, evaluate(points))
            scalar[mesh.num_vertices + mesh.num_edges:] = moments.reshape(-1, self.components)
        return scalar.T.ravel().copy()

    def _assemble_scalar(self, local: np.ndarray) -> sparse.csr_matrix:
        rows = np.broadcast_to(self.cell_scalar_dofs[:, :, None], local.shape)
        cols = np.broadcast_to(self.cell_scalar_dofs[:, None, :], local.shape)
        return sparse.coo_matrix((local.ravel(), (rows.ravel(), cols.ravel())),
                                 shape=(self.num_scalar, self.num_scalar)).tocsr()

    def scalar_mass_matrix(self, degree: int = ASSEMBLY_DEGREE) -> sparse.csr_matrix:
        values, _ = self.tabulate(degree)
        _, weights = self.quadrature_points(degree)
        return self._assemble_scalar(np.einsum('tq,tqa,tqb->tab', weights, values, values))

    def scalar_stiffness_matrix(self, degree: int = ASSEMBLY_DEGREE) -> sparse.csr_matrix:
        _, gradients = self.tabulate(degree)
        _, weights = self.quadrature_points(degree)
        return self._assemble_scalar(np.einsum('tq,tqad,tqbd->tab', weights, gradients, gradients))

    def gram_matrix(self, norm: str = 'L2', degree: int = ASSEMBLY_DEGREE) -> sparse.csr_matrix:
        """
        Gram matrix of the field norm with Frobenius component weights.

        :param norm: 'L2', 'H1_SEMI' or 'H1' (the full inner product)
        :return: Sparse (dim, dim) matrix
        """
        if norm == 'L2':
            scalar = self.scalar_mass_matrix(degree)
        elif norm == 'H1_SEMI':
            scalar = self.scalar_stiffness_matrix(degree)
        elif norm == 'H1':
            scalar = self.scalar_mass_matrix(degree) + self.scalar_stiffness_matrix(degree)
        else:
            raise R13Exception(f"Unknown norm '{norm}'")
        return sparse.kron(sparse.diags(self.component_weights), scalar, format='csr')

    def integral_vector(self, degree: int = ASSEMBLY_DEGREE) -> np.ndarray:
        """Integrals of the scalar basis functions, shape (num_scalar,)"""
        values, _ = self.tabulate(degree)
        _, weights = self.quadrature_points(degree)
        local = np.einsum('tq,tqa->ta', weights, values)
        return np.bincount(self.cell_scalar_dofs.ravel(), weights=local.ravel(), minlength=self.num_scalar)


class FEFunction:
    """A discrete field: coefficient vector plus its FieldSpace"""

    def __init__(self, space: FieldSpace, coefficients):
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.shape != (space.dim,):
            raise R13Exception(f"Coefficient vector of length {coefficients.shape} does not match {space!r}")
        self.space = space
        self.coefficients = coefficients

    @property
    def name(self) -> str:
        return self.space.name

    @property
    def components(self) -> int:
        return self.space.components

    def _cell_coefficients(self, triangles: Optional[np.ndarray] = None) -> np.ndarray:
        dofs = self.space.cell_dofs if triangles is None else self.space.cell_dofs[triangles]
        return self.coefficients[dofs].reshape(len(dofs), self.components, self.space.num_local)

    def cell_values(self, degree: int = ASSEMBLY_DEGREE) -> np.ndarray:
        """Values at the points of the triangle rule, shape (T, q, components)"""
        values, _ = self.space.tabulate(degree)
        return np.einsum('tqa,tca->tqc', values, self._cell_coefficients())

    def cell_gradients(self, degree: int = ASSEMBLY_DEGREE) -> np.ndarray:
        """Gradients at the points of the triangle rule, shape (T, q, components, 2)"""
        _, gradients = self.space.tabulate(degree)
        return np.einsum('tqad,tca->tqcd', gradients, self._cell_coefficients())

    def evaluate_in_cells(self, triangles: np.ndarray, bary: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Values (n, components) and gradients (n, components, 2) at barycentric points, one per listed triangle.
        """
        mesh = self.space.mesh
        values, derivs = reference_basis(self.space.element, bary)
        scales = self.space.scales[triangles]
        gradients = np.einsum('nal,nld->nad', derivs, mesh.bary_gradients[triangles]) * scales[:, :, None]
        coefficients = self._cell_coefficients(triangles)
        return (np.einsum('na,nca->nc', values * scales, coefficients),
                np.einsum('nad,nca->ncd', gradients, coefficients))

    def evaluate(self, points, snap: float = 1e-12, extrapolate: float = 0.0,
                 strict: bool = True) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Values and gradients at arbitrary points by point location.

        :return: Tuple of values (n, components), gradients (n, components, 2) and the found mask; points
                 that were not found carry NaN when strict is False
        """
        triangles, bary, found = self.space.mesh.locate_points(points, snap, extrapolate, strict)
        n = len(triangles)
        values = np.full((n, self.components), np.nan)
        gradients = np.full((n, self.components, 2), np.nan)
        if np.any(found):
            v, g = self.evaluate_in_cells(triangles[found], bary[found])
            values[found] = v
            gradients[found] = g
        return values, gradients, found

    def edge_trace(self, edge: int, t) -> np.ndarray:
        """Values along a mesh edge at parameters t in [0, 1], measured from its lower-numbered vertex"""
        mesh = self.space.mesh
        triangle = mesh.edge_triangles[edge, 0]
        local = mesh.edge_local_index[edge, 0]
        t = np.atleast_1d(np.asarray(t, dtype=float))
        start = mesh.triangles[triangle, (local + 1) % 3]
        if start != mesh.edges[edge, 0]:
            t = 1.0 - t
        bary = edge_barycentric(local, t)
        values, _ = self.evaluate_in_cells(np.full(len(t), triangle), bary)
        return values

    def __add__(self, other: 'FEFunction') -> 'FEFunction':
        return FEFunction(self.space, self.coefficients + other.coefficients)

    def __sub__(self, other: 'FEFunction') -> 'FEFunction':
        return FEFunction(self.space, self.coefficients - other.coefficients)

    def __mul__(self, scale: float) -> 'FEFunction':
        return FEFunction(self.space, scale * self.coefficients)

    __rmul__ = __mul__
