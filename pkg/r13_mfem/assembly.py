"""
Assembly of the five-field saddle-point system for the linearized R13 equations in two dimensions.

Unknowns are ordered (sigma, s, p, u, theta) followed by one Lagrange multiplier enforcing a zero-mean pressure.
With S = (sigma, s, p) and U = (u, theta) the system reads

    A(S, R) + B(R, U) = l1(r) + l2(tau)
    B(S, V)           = 0

with A(S, R) = a(s, r) + c(s, tau) - c(r, sigma) + d(sigma, tau) and
B(S, V) = -b(kappa, s) - e(v, sigma) - g(p, v).  Every form matrix below is stored with the test space on rows.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
from scipy import sparse

from r13_mfem.elements import (
    ASSEMBLY_DEGREE, BOUNDARY_DEGREE, edge_barycentric, edge_quadrature, reference_basis
)
from r13_mfem.exceptions import AssemblyException
from r13_mfem.mesh import UNLABELED, Mesh
from r13_mfem.spaces import FIELD_COMPONENTS, FIELD_NAMES, ElementPreset, FEFunction, FieldSpace
from r13_mfem.tensorops import inplane_stf_gram

logger = logging.getLogger(__name__)

WallValue = Union[float, Callable[[np.ndarray], np.ndarray]]

# unit symmetric tensors per stored component (s11, s12, s22)
COMPONENT_TENSORS = np.array([
    [[1.0, 0.0], [0.0, 0.0]],
    [[0.0, 1.0], [1.0, 0.0]],
    [[0.0, 0.0], [0.0, 1.0]],
])
# sigma~ : tau~ of the trace-free 3D embedding in stored components
EMBEDDED_MASS_WEIGHTS = np.array([
    [2.0, 0.0, 1.0],
    [0.0, 2.0, 0.0],
    [1.0, 0.0, 2.0],
])


class DofMap:
    """Field spaces of a preset on a mesh and their offsets in the monolithic unknown vector"""

    def __init__(self, mesh: Mesh, preset: ElementPreset):
        self.mesh = mesh
        self.preset = preset
        self.spaces: Dict[str, FieldSpace] = {
            name: FieldSpace(mesh, preset.element_for(name), FIELD_COMPONENTS[name], name) for name in FIELD_NAMES
        }
        self.offsets: Dict[str, int] = {}
        position = 0
        for name in FIELD_NAMES:
            self.offsets[name] = position
            position += self.spaces[name].dim
        self.multiplier_index = position
        self.total = position + 1

    def field_slice(self, name: str) -> slice:
        start = self.offsets[name]
        return slice(start, start + self.spaces[name].dim)

    def split(self, vector: np.ndarray) -> Dict[str, np.ndarray]:
        return {name: vector[self.field_slice(name)] for name in FIELD_NAMES}

    def describe(self) -> str:
        response = f"DofMap ({self.preset.value}), total {self.total}\n"
        for name in FIELD_NAMES:
            space = self.spaces[name]
            response += f"* {name}: offset {self.offsets[name]}, {space.element.name} x {space.components}," \
                        f" dim {space.dim}\n"
        response += f"* multiplier: index {self.multiplier_index}\n"
        return response


class WallData:
    """
    Physical parameters and wall data per boundary label.  Wall values are constants or callables mapping
    points (n, 2) to values (n,).
    """

    def __init__(self, kn: float, chi: float = 1.0, velocity: Optional[Dict[int, WallValue]] = None,
                 temperature: Optional[Dict[int, WallValue]] = None):
        if not kn > 0.0:
            raise AssemblyException(f"Knudsen number must be positive, got {kn}")
        if not chi > 0.0:
            raise AssemblyException(f"Accommodation factor must be positive, got {chi}")
        self.kn = float(kn)
        self.chi = float(chi)
        self.velocity: Dict[int, WallValue] = dict(velocity or {})
        self.temperature: Dict[int, WallValue] = dict(temperature or {})

    def values(self, kind: str, label: int, points: np.ndarray) -> np.ndarray:
        table = self.velocity if kind == 'velocity' else self.temperature
        if label not in table:
            raise AssemblyException(f"No wall {kind} given for boundary label {label}")
        value = table[label]
        if callable(value):
            return np.asarray(value(points.reshape(-1, 2)), dtype=float).reshape(points.shape[:-1])
        return np.full(points.shape[:-1], float(value))

    def describe(self) -> str:
        def show(table):
            return ', '.join(f"{label}:{'f(x)' if callable(v) else v}" for label, v in sorted(table.items()))
        return (f"Kn = {self.kn}, chi = {self.chi}, u_t^W = [{show(self.velocity)}],"
                f" theta^W = [{show(self.temperature)}]")


def _scatter(row_dofs: np.ndarray, col_dofs: np.ndarray, local: np.ndarray, shape: Tuple[int, int]):
    rows = np.broadcast_to(row_dofs[:, :, None], local.shape)
    cols = np.broadcast_to(col_dofs[:, None, :], local.shape)
    return sparse.coo_matrix((local.ravel(), (rows.ravel(), cols.ravel())), shape=shape).tocsr()


def assemble_volume_forms(dofmap: DofMap, kn: float, degree: int = ASSEMBLY_DEGREE) -> Dict[str, sparse.csr_matrix]:
    """
    Volume parts of the bilinear forms, test space on rows:
    a (s x s), c (s x sigma), d (sigma x sigma), b (s x theta), e (u x sigma), g (u x p).

    The d-form volume term Kn Stf(grad sigma~) : Stf(grad tau~) uses the Gram matrix of the third-order Stf
    projection on embedded in-plane gradients; its mass term is (1/(2 Kn)) sigma~ : tau~ of the embedding.

    :param dofmap: The field spaces
    :param kn: Knudsen number
    :param degree: Quadrature exactness
    :return: Dict of sparse matrices
    """
    if not kn > 0.0:
        raise AssemblyException(f"Knudsen number must be positive, got {kn}")
    sp = dofmap.spaces
    sig, s_space, u_space = sp['sigma'], sp['s'], sp['u']
    _, weights = sig.quadrature_points(degree)
    phi, dphi = sig.tabulate(degree)
    psi, dpsi = s_space.tabulate(degree)
    num_triangles = dofmap.mesh.num_triangles
    forms = {}

    # d: Kn Stf grad : Stf grad + mass of the embedding / (2 Kn)
    grad_grad = np.einsum('tq,tqak,tqbl->tabkl', weights, dphi, dphi)
    mass = np.einsum('tq,tqa,tqb->tab', weights, phi, phi)
    local = kn * np.einsum('ekcl,tabkl->tebca', inplane_stf_gram(), grad_grad.transpose(0, 2, 1, 3, 4))
    local = local + np.einsum('ec,tba->tebca', EMBEDDED_MASS_WEIGHTS, mass) / (2.0 * kn)
    k = sig.num_local
    forms['d'] = _scatter(sig.cell_dofs, sig.cell_dofs, local.reshape(num_triangles, 3 * k, 3 * k),
                          (sig.dim, sig.dim))

    # a: (24/25) Kn sym grad s : sym grad r + (12/25) Kn div s div r + (4/15) / Kn s . r
    ks = s_space.num_local
    s_grad_grad = np.einsum('tq,tqak,tqbl->tabkl', weights, dpsi, dpsi)
    s_mass = np.einsum('tq,tqa,tqb->tab', weights, psi, psi)
    eye = np.eye(2)
    laplace = np.einsum('tabkk->tab', s_grad_grad)
    # row (j, b) tests r = psi_b e_j, column (i, a) is the trial s = psi_a e_i
    sym_part = 0.5 * (np.einsum('ij,tab->tjbia', eye, laplace) + np.einsum('tabji->tjbia', s_grad_grad))
    div_part = np.einsum('tabij->tjbia', s_grad_grad)
    mass_part = np.einsum('ij,tab->tjbia', eye, s_mass)
    local = (24.0 / 25.0) * kn * sym_part + (12.0 / 25.0) * kn * div_part + (4.0 / 15.0) / kn * mass_part
    forms['a'] = _scatter(s_space.cell_dofs, s_space.cell_dofs, local.reshape(num_triangles, 2 * ks, 2 * ks),
                          (s_space.dim, s_space.dim))

    # c: (2/5) (sigma, grad r); row (j, b) tests r = psi_b e_j, column (e, a) is sigma = phi_a E_e
    value_grad = np.einsum('tq,tqa,tqbk->tbak', weights, phi, dpsi)
    local = 0.4 * np.einsum('ejk,tbak->tjbea', COMPONENT_TENSORS, value_grad)
    forms['c'] = _scatter(s_space.cell_dofs, sig.cell_dofs, local.reshape(num_triangles, 2 * ks, 3 * k),
                          (s_space.dim, sig.dim))

    # e: (div tau, v); row (i, b) tests v = chi_b e_i, column (e, a) is tau = phi_a E_e
    chi, _ = u_space.tabulate(degree)
    ku = u_space.num_local
    grad_value = np.einsum('tq,tqb,tqak->tbak', weights, chi, dphi)
    local = np.einsum('eik,tbak->tibea', COMPONENT_TENSORS, grad_value)
    forms['e'] = _scatter(u_space.cell_dofs, sig.cell_dofs, local.reshape(num_triangles, 2 * ku, 3 * k),
                          (u_space.dim, sig.dim))

    # b: (theta, div r); row (i, b) tests r = psi_b e_i
    t_space = sp['theta']
    eta, _ = t_space.tabulate(degree)
    local = np.einsum('tq,tqa,tqbi->tiba', weights, eta, dpsi)
    forms['b'] = _scatter(s_space.cell_dofs, t_space.cell_dofs,
                          local.reshape(num_triangles, 2 * ks, t_space.num_local), (s_space.dim, t_space.dim))

    # g: (v, grad p); row (i, b) tests v = chi_b e_i
    p_space = sp['p']
    _, dpi = p_space.tabulate(degree)
    local = np.einsum('tq,tqb,tqai->tiba', weights, chi, dpi)
    forms['g'] = _scatter(u_space.cell_dofs, p_space.cell_dofs,
                          local.reshape(num_triangles, 2 * ku, p_space.num_local), (u_space.dim, p_space.dim))
    logger.debug("Volume forms assembled on %d triangles (%s)", num_triangles, dofmap.preset.value)
    return forms


@dataclass
class BoundaryTabulation:
    """Field values along boundary edges at the points of an edge rule"""
    points: np.ndarray       # (B, q, 2)
    weights: np.ndarray      # (B, q), edge rule weights times edge length
    normals: np.ndarray      # (B, 2)
    tangents: np.ndarray     # (B, 2)
    labels: np.ndarray       # (B,)
    values: Dict[str, np.ndarray] = field(default_factory=dict)  # (B, q, k) per field


def tabulate_boundary(dofmap: DofMap, degree: int = BOUNDARY_DEGREE) -> BoundaryTabulation:
    mesh = dofmap.mesh
    rule = edge_quadrature(degree)
    local = mesh.boundary_local_index
    bary = np.stack([edge_barycentric(int(k), rule.points) for k in range(3)])[local]
    triangles = mesh.boundary_triangles
    points = np.einsum('bql,bld->bqd', bary, mesh.vertices[mesh.triangles[triangles]])
    tab = BoundaryTabulation(
        points=points,
        weights=mesh.boundary_lengths[:, None] * rule.weights[None, :],
        normals=mesh.boundary_normals,
        tangents=mesh.boundary_tangents,
        labels=mesh.boundary_labels,
    )
    for name in ('sigma', 's'):
        space = dofmap.spaces[name]
        values, _ = reference_basis(space.element, bary)
        tab.values[name] = values * space.scales[triangles][:, None, :]
    return tab


def frame_coefficients(normals: np.ndarray, tangents: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coefficients (B, 3) giving sigma_nn, sigma_tt and sigma_nt from the stored components (s11, s12, s22)"""
    n1, n2 = normals[:, 0], normals[:, 1]
    t1, t2 = tangents[:, 0], tangents[:, 1]
    nn = np.stack([n1 * n1, 2.0 * n1 * n2, n2 * n2], axis=1)
    tt = np.stack([t1 * t1, 2.0 * t1 * t2, t2 * t2], axis=1)
    nt = np.stack([n1 * t1, n1 * t2 + n2 * t1, n2 * t2], axis=1)
    return nn, tt, nt


def _check_labels(mesh: Mesh) -> None:
    unlabeled = np.count_nonzero(mesh.boundary_labels == UNLABELED)
    if unlabeled:
        raise AssemblyException(f"{unlabeled} boundary edge(s) carry no label")


def assemble_boundary_forms(dofmap: DofMap, chi: float,
                            degree: int = BOUNDARY_DEGREE) -> Dict[str, sparse.csr_matrix]:
    """
    Boundary parts of a (s x s), c (s x sigma) and d (sigma x sigma) from the Onsager wall conditions, reduced to
    2D with the out-of-plane axis as the second tangent:

    * a: 1/(2 chi) s_n r_n + (12/25) chi s_t r_t
    * c: -(3/20) sigma_nn r_n - (1/5) sigma_nt r_t
    * d: (9/8) chi sigma_nn tau_nn + chi (sigma_tt + sigma_nn/2)(tau_tt + tau_nn/2) + 1/chi sigma_nt tau_nt
    """
    if not chi > 0.0:
        raise AssemblyException(f"Accommodation factor must be positive, got {chi}")
    mesh = dofmap.mesh
    _check_labels(mesh)
    sig, s_space = dofmap.spaces['sigma'], dofmap.spaces['s']
    tab = tabulate_boundary(dofmap, degree)
    phi, psi = tab.values['sigma'], tab.values['s']
    n, t = tab.normals, tab.tangents
    nn, tt, nt = frame_coefficients(n, t)
    rows_s = s_space.cell_dofs[mesh.boundary_triangles]
    rows_sig = sig.cell_dofs[mesh.boundary_triangles]
    num_boundary = len(mesh.boundary_edges)
    k, ks = sig.num_local, s_space.num_local
    forms = {}

    psi_psi = np.einsum('bq,bqa,bqc->bac', tab.weights, psi, psi)
    frame = np.einsum('bj,bi->bji', n, n) / (2.0 * chi) + (12.0 / 25.0) * chi * np.einsum('bj,bi->bji', t, t)
    local = np.einsum('bji,bac->bjaic', frame, psi_psi)
    forms['a'] = _scatter(rows_s, rows_s, local.reshape(num_boundary, 2 * ks, 2 * ks), (s_space.dim, s_space.dim))

    psi_phi = np.einsum('bq,bqr,bqc->brc', tab.weights, psi, phi)
    frame = -0.15 * np.einsum('bj,be->bje', n, nn) - 0.2 * np.einsum('bj,be->bje', t, nt)
    local = np.einsum('bje,brc->bjrec', frame, psi_phi)
    forms['c'] = _scatter(rows_s, rows_sig, local.reshape(num_boundary, 2 * ks, 3 * k), (s_space.dim, sig.dim))

    phi_phi = np.einsum('bq,bqr,bqc->brc', tab.weights, phi, phi)
    shifted = tt + 0.5 * nn
    frame = (9.0 / 8.0) * chi * np.einsum('bf,be->bfe', nn, nn) + chi * np.einsum('bf,be->bfe', shifted, shifted) \
        + np.einsum('bf,be->bfe', nt, nt) / chi
    local = np.einsum('bfe,brc->bfrec', frame, phi_phi)
    forms['d'] = _scatter(rows_sig, rows_sig, local.reshape(num_boundary, 3 * k, 3 * k), (sig.dim, sig.dim))
    return forms


def assemble_rhs(dofmap: DofMap, wall: WallData, degree: int = BOUNDARY_DEGREE) -> Tuple[np.ndarray, np.ndarray]:
    """
    Load vectors l1(r) = -int theta^W r_n over the s space and l2(tau) = -int u_t^W tau_nt over the sigma space.

    :return: Tuple (l1, l2)
    """
    mesh = dofmap.mesh
    _check_labels(mesh)
    sig, s_space = dofmap.spaces['sigma'], dofmap.spaces['s']
    tab = tabulate_boundary(dofmap, degree)
    theta_w = np.zeros(tab.weights.shape)
    velocity_w = np.zeros(tab.weights.shape)
    for label in np.unique(tab.labels):
        on_label = tab.labels == label
        theta_w[on_label] = wall.values('temperature', int(label), tab.points[on_label])
        velocity_w[on_label] = wall.values('velocity', int(label), tab.points[on_label])
    _, _, nt = frame_coefficients(tab.normals, tab.tangents)
    num_boundary = len(mesh.boundary_edges)
    local = -np.einsum('bq,bq,bqr,bj->bjr', tab.weights, theta_w, tab.values['s'], tab.normals)
    l1 = np.bincount(s_space.cell_dofs[mesh.boundary_triangles].ravel(),
                     weights=local.reshape(num_boundary, -1).ravel(), minlength=s_space.dim)
    local = -np.einsum('bq,bq,bqr,be->ber', tab.weights, velocity_w, tab.values['sigma'], nt)
    l2 = np.bincount(sig.cell_dofs[mesh.boundary_triangles].ravel(),
                     weights=local.reshape(num_boundary, -1).ravel(), minlength=sig.dim)
    return l1, l2


class BlockSystem:
    """
    The assembled monolithic system in the unknown ordering (sigma, s, p, u, theta, multiplier), with the
    individual form matrices kept for diagnostics.  Treat as immutable once built.
    """

    def __init__(self, dofmap: DofMap, wall: WallData, volume: Dict[str, sparse.csr_matrix],
                 boundary: Dict[str, sparse.csr_matrix], l1: np.ndarray, l2: np.ndarray):
        self.dofmap = dofmap
        self.wall = wall
        self.volume = volume
        self.boundary = boundary
        self.forms = {name: volume[name] + boundary[name] if name in boundary else volume[name] for name in volume}
        f = self.forms
        mean = dofmap.spaces['p'].integral_vector()[None, :]
        blocks = [
            [f['d'], f['c'].T, None, -f['e'].T, None, None],
            [-f['c'], f['a'], None, None, -f['b'], None],
            [None, None, None, -f['g'].T, None, sparse.csr_matrix(mean.T)],
            [-f['e'], None, -f['g'], None, None, None],
            [None, -f['b'].T, None, None, None, None],
            [None, None, sparse.csr_matrix(mean), None, None, None],
        ]
        shapes = [dofmap.spaces[name].dim for name in FIELD_NAMES] + [1]
        for i, size in enumerate(shapes):
            if all(blocks[i][j] is None for j in range(len(shapes))):
                blocks[i][i] = sparse.csr_matrix((size, size))
        # bmat needs every block row and column to have at least one sized entry
        blocks[2][2] = sparse.csr_matrix((shapes[2], shapes[2]))
        blocks[3][3] = sparse.csr_matrix((shapes[3], shapes[3]))
        blocks[4][4] = sparse.csr_matrix((shapes[4], shapes[4]))
        blocks[5][5] = sparse.csr_matrix((1, 1))
        self.matrix: sparse.csr_matrix = sparse.bmat(blocks, format='csr')
        self.rhs = np.zeros(dofmap.total)
        self.rhs[dofmap.field_slice('sigma')] = l2
        self.rhs[dofmap.field_slice('s')] = l1

    @property
    def mesh(self) -> Mesh:
        return self.dofmap.mesh

    @property
    def preset(self) -> ElementPreset:
        return self.dofmap.preset

    @property
    def kn(self) -> float:
        return self.wall.kn

    @property
    def chi(self) -> float:
        return self.wall.chi

    @property
    def size(self) -> int:
        return self.dofmap.total

    def primal_slice(self) -> slice:
        """Unknowns (sigma, s, p) of the A block"""
        return slice(0, self.dofmap.offsets['u'])

    def constraint_slice(self) -> slice:
        """Unknowns (u, theta) of the B block"""
        return slice(self.dofmap.offsets['u'], self.dofmap.multiplier_index)

    def a_block(self) -> sparse.csr_matrix:
        s = self.primal_slice()
        return self.matrix[s, s]

    def b_block(self) -> sparse.csr_matrix:
        """B acting on (sigma, s, p), tested with (u, theta)"""
        return self.matrix[self.constraint_slice(), self.primal_slice()]

    def functions(self, vector: np.ndarray) -> Dict[str, FEFunction]:
        split = self.dofmap.split(vector)
        return {name: FEFunction(self.dofmap.spaces[name], values) for name, values in split.items()}

    def dump(self, path: Union[str, Path]) -> Path:
        """
        Writes the matrix as 'row col value' lines plus a sidecar '<path>.offsets' file listing the field offsets.

        :return: Path of the sidecar file
        """
        path = Path(path)
        coo = self.matrix.tocoo()
        lines = [f"{r} {c} {v!r}" for r, c, v in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())]
        path.write_text('\n'.join(lines) + '\n')
        sidecar = path.with_name(path.name + '.offsets')
        meta = [f"size {self.size}", f"preset {self.preset.value}", f"kn {self.kn!r}", f"chi {self.chi!r}"]
        meta.extend(f"{name} {self.dofmap.offsets[name]} {self.dofmap.spaces[name].dim}" for name in FIELD_NAMES)
        meta.append(f"multiplier {self.dofmap.multiplier_index} 1")
        sidecar.write_text('\n'.join(meta) + '\n')
        return sidecar


def build_system(mesh: Mesh, preset: ElementPreset, wall: WallData, max_dofs: Optional[int] = None) -> BlockSystem:
    """
    Assembles the monolithic system for a mesh, element preset and wall data.

    :param mesh: The mesh; every boundary edge must be labeled
    :param preset: The element preset
    :param wall: Knudsen number, accommodation factor and wall data for every label of the mesh
    :param max_dofs: Optional safety cap on the number of unknowns
    :return: The BlockSystem
    """
    dofmap = DofMap(mesh, preset)
    if max_dofs is not None and dofmap.total > max_dofs:
        raise AssemblyException(f"System has {dofmap.total} unknowns, above the cap of {max_dofs}")
    logger.debug("Assembling %s system with %d unknowns", preset.value, dofmap.total)
    volume = assemble_volume_forms(dofmap, wall.kn)
    boundary = assemble_boundary_forms(dofmap, wall.chi)
    l1, l2 = assemble_rhs(dofmap, wall)
    return BlockSystem(dofmap, wall, volume, boundary, l1, l2)
