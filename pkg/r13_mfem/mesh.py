import logging
from dataclasses import dataclass, field
from functools import cached_property
from math import ceil, cos, pi, sin, sqrt
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.spatial import cKDTree

from r13_mfem.exceptions import DegenerateElementException, MeshException, PointLocationException

logger = logging.getLogger(__name__)

UNLABELED = 0
MESH_FILE_HEADER = 'mesh2d 1'

# generator contract for the annulus builder
ANNULUS_H_FACTOR_BOUND = 1.5
ASPECT_RATIO_BOUND = 5.0

EdgeKey = Tuple[int, int]


def _edge_key(a: int, b: int) -> EdgeKey:
    return (a, b) if a < b else (b, a)


def _read_only(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class Mesh:
    """
    A conforming 2D triangulation with labeled boundary edges.

    Local edge k of a triangle is the edge opposite local vertex k, running from vertex k+1 to vertex k+2
    (indices modulo 3).  Every boundary edge carries an outward unit normal and the unit tangent obtained by
    rotating that normal counterclockwise by 90 degrees.  A built mesh is immutable: all arrays are read-only.
    """

    def __init__(self, vertices, triangles, boundary_labels: Optional[Dict[EdgeKey, int]] = None,
                 label_names: Optional[Dict[int, str]] = None, target_h: Optional[float] = None):
        """
        Constructs the mesh connectivity and boundary frames.

        :param vertices: Array-like of shape (V, 2) with vertex coordinates
        :param triangles: Array-like of shape (T, 3) of 0-based vertex indices
        :param boundary_labels: Mapping from sorted vertex pair to integer label; missing boundary edges are unlabeled
        :param label_names: Optional mapping from integer label to a readable name such as 'inner'
        :param target_h: The target size the generator was asked for, recorded for the quality report
        """
        self.vertices = _read_only(np.array(vertices, dtype=float).reshape(-1, 2))
        self.triangles = _read_only(np.array(triangles, dtype=np.int64).reshape(-1, 3))
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices)):
            raise MeshException("Triangle vertex index out of range")
        self.target_h = target_h
        self._boundary_label_map: Dict[EdgeKey, int] = dict(boundary_labels or {})
        self.boundary_label_names: Dict[int, str] = dict(label_names or {})
        self._build_edges()
        self._build_boundary()

    def _build_edges(self) -> None:
        num_triangles = len(self.triangles)
        local_pairs = np.stack([
            self.triangles[:, [1, 2]], self.triangles[:, [2, 0]], self.triangles[:, [0, 1]]
        ], axis=1).reshape(-1, 2)
        sorted_pairs = np.sort(local_pairs, axis=1)
        edges, inverse = np.unique(sorted_pairs, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        num_edges = len(edges)
        counts = np.bincount(inverse, minlength=num_edges)
        flat_triangle = np.repeat(np.arange(num_triangles), 3)
        flat_local = np.tile(np.arange(3), num_triangles)
        order = np.argsort(inverse, kind='stable')
        starts = np.searchsorted(inverse[order], np.arange(num_edges))
        edge_triangles = -np.ones((num_edges, 2), dtype=np.int64)
        edge_local = -np.ones((num_edges, 2), dtype=np.int64)
        edge_triangles[:, 0] = flat_triangle[order[starts]]
        edge_local[:, 0] = flat_local[order[starts]]
        shared = np.nonzero(counts >= 2)[0]
        edge_triangles[shared, 1] = flat_triangle[order[starts[shared] + 1]]
        edge_local[shared, 1] = flat_local[order[starts[shared] + 1]]
        self.edges = _read_only(edges.astype(np.int64))
        self.edge_counts = _read_only(counts)
        self.edge_triangles = _read_only(edge_triangles)
        self.edge_local_index = _read_only(edge_local)
        self.triangle_edges = _read_only(inverse.reshape(num_triangles, 3).astype(np.int64))

    def _build_boundary(self) -> None:
        boundary = np.nonzero(self.edge_counts == 1)[0]
        triangle = self.edge_triangles[boundary, 0]
        local = self.edge_local_index[boundary, 0]
        tri_vertices = self.triangles[triangle]
        start = tri_vertices[np.arange(len(boundary)), (local + 1) % 3]
        stop = tri_vertices[np.arange(len(boundary)), (local + 2) % 3]
        delta = self.vertices[stop] - self.vertices[start]
        lengths = np.linalg.norm(delta, axis=1)
        normals = np.stack([delta[:, 1], -delta[:, 0]], axis=1) / lengths[:, None]
        midpoints = 0.5 * (self.vertices[start] + self.vertices[stop])
        centroids = self.vertices[tri_vertices].mean(axis=1)
        # outward means pointing away from the adjacent centroid, whatever the triangle orientation
        flip = np.einsum('bi,bi->b', normals, centroids - midpoints) > 0.0
        normals[flip] *= -1.0
        tangents = np.stack([-normals[:, 1], normals[:, 0]], axis=1)
        labels = np.array(
            [self._boundary_label_map.get(_edge_key(int(a), int(b)), UNLABELED) for a, b in zip(start, stop)],
            dtype=np.int64
        )
        self.boundary_edges = _read_only(boundary)
        self.boundary_triangles = _read_only(triangle)
        self.boundary_local_index = _read_only(local)
        self.boundary_vertices = _read_only(np.stack([start, stop], axis=1))
        self.boundary_lengths = _read_only(lengths)
        self.boundary_normals = _read_only(normals)
        self.boundary_tangents = _read_only(tangents)
        self.boundary_labels = _read_only(labels)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return _read_only(0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]))

    @cached_property
    def areas(self) -> np.ndarray:
        """Triangle areas; raises if any triangle is degenerate or clockwise"""
        if np.any(self.signed_areas <= 0.0):
            bad = int(np.argmin(self.signed_areas))
            raise DegenerateElementException(
                f"Triangle {bad} has non-positive signed area {self.signed_areas[bad]:.3e}"
            )
        return self.signed_areas

    @cached_property
    def centroids(self) -> np.ndarray:
        return _read_only(self.vertices[self.triangles].mean(axis=1))

    @cached_property
    def local_edge_lengths(self) -> np.ndarray:
        """Lengths of the three local edges of every triangle, shape (T, 3)"""
        p = self.vertices[self.triangles]
        return _read_only(np.stack([
            np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
            np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
            np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
        ], axis=1))

    @cached_property
    def diameters(self) -> np.ndarray:
        return _read_only(self.local_edge_lengths.max(axis=1))

    @property
    def h_max(self) -> float:
        return float(self.diameters.max())

    @property
    def area(self) -> float:
        return float(self.signed_areas.sum())

    @cached_property
    def bary_gradients(self) -> np.ndarray:
        """Constant gradients of the three barycentric coordinates of every triangle, shape (T, 3, 2)"""
        p = self.vertices[self.triangles]
        two_area = 2.0 * self.areas
        grads = np.empty((self.num_triangles, 3, 2))
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            grads[:, i, 0] = (p[:, j, 1] - p[:, k, 1]) / two_area
            grads[:, i, 1] = (p[:, k, 0] - p[:, j, 0]) / two_area
        return _read_only(grads)

    @cached_property
    def boundary_vertex_mask(self) -> np.ndarray:
        mask = np.zeros(self.num_vertices, dtype=bool)
        mask[self.boundary_vertices.ravel()] = True
        return _read_only(mask)

    @cached_property
    def boundary_edge_mask(self) -> np.ndarray:
        mask = np.zeros(self.num_edges, dtype=bool)
        mask[self.boundary_edges] = True
        return _read_only(mask)

    @cached_property
    def vertex_triangle_counts(self) -> np.ndarray:
        return _read_only(np.bincount(self.triangles.ravel(), minlength=self.num_vertices))

    def label_id(self, name: str) -> int:
        """Returns the integer boundary label for a name such as 'inner', accepting numeric strings too"""
        for label, label_name in self.boundary_label_names.items():
            if label_name == name:
                return label
        try:
            label = int(name)
        except ValueError:
            raise MeshException(f"Unknown boundary label name '{name}'") from None
        if label not in set(self.boundary_labels.tolist()):
            raise MeshException(f"Boundary label {label} does not occur in this mesh")
        return label

    def labeled_edges(self) -> Dict[EdgeKey, int]:
        return dict(self._boundary_label_map)

    def translated(self, shift) -> 'Mesh':
        """Returns a copy of this mesh with every vertex shifted by the given 2D vector"""
        return Mesh(self.vertices + np.asarray(shift, dtype=float), self.triangles, self._boundary_label_map,
                    self.boundary_label_names, self.target_h)

    def rotated(self, angle: float) -> 'Mesh':
        """Returns a copy of this mesh rotated counterclockwise about the origin by the given angle in radians"""
        rotation = np.array([[cos(angle), -sin(angle)], [sin(angle), cos(angle)]])
        return Mesh(self.vertices @ rotation.T, self.triangles, self._boundary_label_map,
                    self.boundary_label_names, self.target_h)

    @cached_property
    def _centroid_tree(self) -> cKDTree:
        return cKDTree(self.centroids)

    def _barycentric(self, points: np.ndarray, candidates: np.ndarray) -> np.ndarray:
        # a barycentric coordinate is 1/3 at the centroid and affine, so it follows from its constant gradient
        offset = points[:, None, :] - self.centroids[candidates]
        return 1.0 / 3.0 + np.einsum('nkid,nkd->nki', self.bary_gradients[candidates], offset)

    def locate_points(self, points, snap: float = 1e-12, extrapolate: float = 0.0,
                      strict: bool = True) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Finds the triangle containing each point and the barycentric coordinates of the point in it.

        :param points: Array of shape (N, 2)
        :param snap: Points whose smallest barycentric coordinate is at least -snap count as inside
        :param extrapolate: Points outside by at most this barycentric margin are assigned to the nearest
                            triangle, with unclipped (extrapolating) coordinates
        :param strict: If True, raise PointLocationException for points that could not be located
        :return: Tuple of (triangle index array with -1 for misses, barycentric coordinates (N, 3), found mask)
        """
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        num_points = len(points)
        triangle = -np.ones(num_points, dtype=np.int64)
        bary = np.zeros((num_points, 3))
        best_margin = np.full(num_points, -np.inf)
        best_triangle = -np.ones(num_points, dtype=np.int64)
        best_bary = np.zeros((num_points, 3))
        pending = np.arange(num_points)
        for neighbours in (8, 32, 128):
            if len(pending) == 0:
                break
            k = min(neighbours, self.num_triangles)
            _, candidates = self._centroid_tree.query(points[pending], k=k)
            candidates = np.asarray(candidates).reshape(len(pending), k)
            coords = self._barycentric(points[pending], candidates)
            margins = coords.min(axis=2)
            pick = np.argmax(margins, axis=1)
            rows = np.arange(len(pending))
            margin = margins[rows, pick]
            improved = margin > best_margin[pending]
            best_margin[pending[improved]] = margin[improved]
            best_triangle[pending[improved]] = candidates[rows, pick][improved]
            best_bary[pending[improved]] = coords[rows, pick][improved]
            inside = margin >= -snap
            triangle[pending[inside]] = candidates[rows, pick][inside]
            bary[pending[inside]] = coords[rows, pick][inside]
            pending = pending[~inside]
            if k == self.num_triangles:
                break
        if len(pending) and extrapolate > 0.0:
            near = best_margin[pending] >= -extrapolate
            triangle[pending[near]] = best_triangle[pending[near]]
            bary[pending[near]] = best_bary[pending[near]]
            pending = pending[~near]
        found = triangle >= 0
        if strict and len(pending):
            first = points[pending[0]]
            raise PointLocationException(
                f"{len(pending)} point(s) lie outside the mesh, first at ({first[0]:.6g}, {first[1]:.6g})"
            )
        return triangle, bary, found


@dataclass
class MeshQualityReport:
    """Diagnostics collected by validate_mesh; this never raises on a bad mesh, it only reports"""
    num_vertices: int
    num_edges: int
    num_triangles: int
    euler_characteristic: int
    h_max: float
    min_angle_degrees: float
    max_aspect_ratio: float
    orientation_violations: int
    conformity_violations: int
    unlabeled_boundary_edges: int
    aspect_ratio_bound: float = ASPECT_RATIO_BOUND
    messages: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.orientation_violations == 0 and self.conformity_violations == 0 and \
            self.max_aspect_ratio <= self.aspect_ratio_bound

    def describe(self) -> str:
        response = "Mesh quality report\n"
        response += f"* V={self.num_vertices} E={self.num_edges} T={self.num_triangles}" \
                    f" (V-E+T={self.euler_characteristic})\n"
        response += f"* h_max = {self.h_max:.6g}\n"
        response += f"* min angle = {self.min_angle_degrees:.4f} deg\n"
        response += f"* max aspect ratio = {self.max_aspect_ratio:.4f} (bound {self.aspect_ratio_bound})\n"
        response += f"* orientation violations = {self.orientation_violations}\n"
        response += f"* conformity violations = {self.conformity_violations}\n"
        response += f"* unlabeled boundary edges = {self.unlabeled_boundary_edges}\n"
        for m in self.messages:
            response += f"* {m}\n"
        return response


def _aspect_ratios(mesh: Mesh) -> np.ndarray:
    # 1 for an equilateral triangle
    lengths = mesh.local_edge_lengths
    perimeter = lengths.sum(axis=1)
    area = np.abs(mesh.signed_areas)
    with np.errstate(divide='ignore'):
        return np.where(area > 0.0, lengths.max(axis=1) * perimeter / (4.0 * sqrt(3.0) * area), np.inf)


def _hanging_vertices(mesh: Mesh) -> int:
    """Counts vertices lying strictly inside a boundary edge, which is what a hanging node looks like"""
    if len(mesh.boundary_edges) == 0:
        return 0
    tree = cKDTree(mesh.vertices)
    start = mesh.vertices[mesh.boundary_vertices[:, 0]]
    stop = mesh.vertices[mesh.boundary_vertices[:, 1]]
    midpoints = 0.5 * (start + stop)
    count = 0
    for b, neighbours in enumerate(tree.query_ball_point(midpoints, 0.5 * mesh.boundary_lengths * (1 + 1e-9))):
        direction = stop[b] - start[b]
        length = mesh.boundary_lengths[b]
        for v in neighbours:
            if v in mesh.boundary_vertices[b]:
                continue
            offset = mesh.vertices[v] - start[b]
            along = offset @ direction / length ** 2
            across = abs(offset[0] * direction[1] - offset[1] * direction[0]) / length
            if 1e-9 < along < 1 - 1e-9 and across < 1e-9 * length:
                count += 1
    return count


def validate_mesh(mesh: Mesh, aspect_ratio_bound: float = ASPECT_RATIO_BOUND) -> MeshQualityReport:
    """
    Reports orientation, conformity and shape quality of a mesh without mutating it.

    :param mesh: The mesh to check
    :param aspect_ratio_bound: Quality bound recorded in the report
    :return: A MeshQualityReport
    """
    p = mesh.vertices[mesh.triangles]
    angles = []
    for i in range(3):
        a = p[:, (i + 1) % 3] - p[:, i]
        b = p[:, (i + 2) % 3] - p[:, i]
        cosine = np.einsum('ti,ti->t', a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        angles.append(np.degrees(np.arccos(np.clip(cosine, -1.0, 1.0))))
    min_angle = float(np.min(angles)) if mesh.num_triangles else 0.0
    orientation = int(np.count_nonzero(mesh.signed_areas <= 0.0))
    over_shared = int(np.count_nonzero(mesh.edge_counts > 2))
    hanging = _hanging_vertices(mesh)
    unlabeled = int(np.count_nonzero(mesh.boundary_labels == UNLABELED))
    aspect = _aspect_ratios(mesh)
    report = MeshQualityReport(
        num_vertices=mesh.num_vertices,
        num_edges=mesh.num_edges,
        num_triangles=mesh.num_triangles,
        euler_characteristic=mesh.num_vertices - mesh.num_edges + mesh.num_triangles,
        h_max=mesh.h_max if mesh.num_triangles else 0.0,
        min_angle_degrees=min_angle,
        max_aspect_ratio=float(aspect.max()) if mesh.num_triangles else 0.0,
        orientation_violations=orientation,
        conformity_violations=over_shared + hanging,
        unlabeled_boundary_edges=unlabeled,
        aspect_ratio_bound=aspect_ratio_bound,
    )
    if orientation:
        report.messages.append(f"{orientation} triangle(s) are clockwise or degenerate")
    if over_shared:
        report.messages.append(f"{over_shared} edge(s) are shared by more than two triangles")
    if hanging:
        report.messages.append(f"{hanging} hanging vertex/vertices found on edge interiors")
    if mesh.target_h is not None:
        report.messages.append(f"target h = {mesh.target_h:.6g}, h_max/h = {report.h_max / mesh.target_h:.4f}")
    return report


def label_boundary_edges(vertices: np.ndarray, triangles: np.ndarray,
                         classify: Callable[[np.ndarray], int]) -> Dict[EdgeKey, int]:
    """
    Assigns a label to every edge used by exactly one triangle, by classifying its midpoint.

    :param vertices: Vertex coordinate array (V, 2)
    :param triangles: Triangle index array (T, 3)
    :param classify: Function mapping an edge midpoint to an integer label
    :return: Mapping from sorted vertex pair to label
    """
    pairs = np.sort(np.concatenate([triangles[:, [1, 2]], triangles[:, [2, 0]], triangles[:, [0, 1]]]), axis=1)
    unique, counts = np.unique(pairs, axis=0, return_counts=True)
    labels = {}
    for a, b in unique[counts == 1]:
        labels[(int(a), int(b))] = classify(0.5 * (vertices[a] + vertices[b]))
    return labels


def _structured_triangles(nx: int, ny: int, symmetric: bool = False) -> np.ndarray:
    """Two counterclockwise triangles per cell of an nx-by-ny vertex-major grid with (nx+1)(ny+1) vertices"""
    triangles = []
    for j in range(ny):
        for i in range(nx):
            v00 = j * (nx + 1) + i
            v10 = v00 + 1
            v01 = v00 + nx + 1
            v11 = v01 + 1
            if symmetric and 2 * i >= nx:
                triangles.append((v00, v10, v01))
                triangles.append((v10, v11, v01))
            else:
                triangles.append((v00, v10, v11))
                triangles.append((v00, v11, v01))
    return np.array(triangles, dtype=np.int64)


def build_unit_square_mesh(n: int, pattern: str = 'diagonal') -> Mesh:
    """
    Builds a uniform triangulation of (0,1)^2 with n cells per side.
    Boundary label 1 ('bottom') is the wall y=0, label 2 ('rest') covers the other three sides.

    :param n: Number of subdivisions per side, at least 1
    :param pattern: 'diagonal' cuts every cell from bottom-left to top-right; 'symmetric' mirrors the cut in the
                    right half so the mesh is invariant under x -> 1-x (requires even n)
    :return: The mesh
    """
    if n < 1:
        raise MeshException(f"Unit square needs at least one subdivision, got n={n}")
    if pattern not in ('diagonal', 'symmetric'):
        raise MeshException(f"Unknown square split pattern '{pattern}'")
    if pattern == 'symmetric' and n % 2:
        raise MeshException(f"The symmetric split pattern needs an even n, got n={n}")
    x = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(x, x)
    vertices = np.stack([xx.ravel(), yy.ravel()], axis=1)
    triangles = _structured_triangles(n, n, symmetric=(pattern == 'symmetric'))
    labels = label_boundary_edges(vertices, triangles, lambda m: 1 if abs(m[1]) < 1e-12 else 2)
    return Mesh(vertices, triangles, labels, {1: 'bottom', 2: 'rest'}, target_h=sqrt(2.0) / n)


def _zip_rings(inner: List[int], outer: List[int]) -> List[Tuple[int, int, int]]:
    """Triangulates the strip between two closed rings whose first points share the angle 0"""
    n_a, n_b = len(inner), len(outer)
    triangles = []
    i = j = 0
    while i < n_a or j < n_b:
        advance_inner = j == n_b or (i < n_a and (i + 1) / n_a <= (j + 1) / n_b)
        if advance_inner:
            triangles.append((inner[i % n_a], inner[(i + 1) % n_a], outer[j % n_b]))
            i += 1
        else:
            triangles.append((inner[i % n_a], outer[(j + 1) % n_b], outer[j % n_b]))
            j += 1
    return triangles


def _orient_counterclockwise(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    clockwise = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0.0
    triangles = triangles.copy()
    triangles[clockwise] = triangles[clockwise][:, [0, 2, 1]]
    return triangles


def _check_generator_quality(mesh: Mesh, h: float) -> None:
    aspect = float(_aspect_ratios(mesh).max())
    if aspect > ASPECT_RATIO_BOUND:
        raise MeshException(f"Generated mesh aspect ratio {aspect:.3f} exceeds the bound {ASPECT_RATIO_BOUND}")
    if mesh.h_max > ANNULUS_H_FACTOR_BOUND * h:
        raise MeshException(f"Generated mesh h_max {mesh.h_max:.4g} exceeds {ANNULUS_H_FACTOR_BOUND} * h")


def build_annulus_mesh(r1: float, r2: float, h: float) -> Mesh:
    """
    Builds a body-fitted triangulation of the ring r1 < |x| < r2 from concentric vertex rings.
    The radial spacing is the largest value not above h that divides r2 - r1, and every ring carries enough
    points for nearly equilateral triangles.  Boundary labels are 1 ('inner') and 2 ('outer').

    :param r1: Inner radius
    :param r2: Outer radius
    :param h: Target mesh size, 0 < h < r2 - r1
    :return: The mesh
    """
    if not 0.0 < r1 < r2:
        raise MeshException(f"Annulus radii must satisfy 0 < R1 < R2, got R1={r1}, R2={r2}")
    if not 0.0 < h < r2 - r1:
        raise MeshException(f"Annulus target size must satisfy 0 < h < R2 - R1, got h={h}")
    num_rings = int(ceil((r2 - r1) / h - 1e-12))
    dr = (r2 - r1) / num_rings
    # slightly below dr so the zipper diagonals stay under sqrt(2) dr
    ds = 0.95 * dr
    vertices = []
    rings = []
    for k in range(num_rings + 1):
        radius = r2 if k == num_rings else r1 + k * dr
        count = max(8, int(ceil(2.0 * pi * radius / ds)))
        ring = []
        for i in range(count):
            angle = 2.0 * pi * i / count
            ring.append(len(vertices))
            vertices.append((radius * cos(angle), radius * sin(angle)))
        rings.append(ring)
    triangles = []
    for k in range(num_rings):
        triangles.extend(_zip_rings(rings[k], rings[k + 1]))
    vertices = np.array(vertices)
    triangles = _orient_counterclockwise(vertices, np.array(triangles, dtype=np.int64))
    middle = 0.5 * (r1 + r2)
    labels = label_boundary_edges(vertices, triangles, lambda m: 1 if np.linalg.norm(m) < middle else 2)
    mesh = Mesh(vertices, triangles, labels, {1: 'inner', 2: 'outer'}, target_h=h)
    _check_generator_quality(mesh, h)
    logger.debug("Annulus mesh R1=%g R2=%g h=%g: %d rings, %d triangles", r1, r2, h, num_rings, mesh.num_triangles)
    return mesh


def build_square_with_hole_mesh(h: float, outer: float = 8.0, hole: Tuple[float, float] = (1.0, 3.0)) -> Mesh:
    """
    Builds a structured triangulation of (0,8)^2 minus the closed obstacle [1,3]^2.
    The grid spacing is 1/ceil(1/h) so the obstacle faces fall on grid lines and its corners are vertices.
    Boundary labels are 1 ('inner', the obstacle) and 2 ('outer').

    :param h: Target cell size, 0 < h <= 0.5
    :param outer: Side length of the outer square
    :param hole: The (low, high) extent of the square obstacle in both directions
    :return: The mesh
    """
    if not 0.0 < h <= 0.5:
        raise MeshException(f"Square-with-hole target size must satisfy 0 < h <= 0.5, got h={h}")
    per_unit = int(ceil(1.0 / h - 1e-12))
    n = int(round(outer * per_unit))
    x = np.linspace(0.0, outer, n + 1)
    xx, yy = np.meshgrid(x, x)
    vertices = np.stack([xx.ravel(), yy.ravel()], axis=1)
    triangles = _structured_triangles(n, n)
    centers = vertices[triangles].mean(axis=1)
    low, high = hole
    inside_hole = np.all((centers > low) & (centers < high), axis=1)
    triangles = triangles[~inside_hole]
    used = np.unique(triangles)
    renumber = -np.ones(len(vertices), dtype=np.int64)
    renumber[used] = np.arange(len(used))
    vertices = vertices[used]
    triangles = renumber[triangles]

    def classify(m):
        on_outer = min(m[0], m[1]) < 1e-9 or max(m[0], m[1]) > outer - 1e-9
        return 2 if on_outer else 1

    labels = label_boundary_edges(vertices, triangles, classify)
    return Mesh(vertices, triangles, labels, {1: 'inner', 2: 'outer'}, target_h=h)


def write_mesh(mesh: Mesh, path: Union[str, Path]) -> None:
    """
    Writes the ASCII interchange format: a 'mesh2d 1' header, optional '# label <id> <name>' comments,
    a counts line 'V T B', then vertex lines 'x y', triangle lines 'i j k' and boundary edge lines 'i j label'.
    """
    path = Path(path)
    lines = [MESH_FILE_HEADER]
    for label, name in sorted(mesh.boundary_label_names.items()):
        lines.append(f"# label {label} {name}")
    lines.append(f"{mesh.num_vertices} {mesh.num_triangles} {len(mesh.boundary_edges)}")
    lines.extend(f"{x!r} {y!r}" for x, y in mesh.vertices.tolist())
    lines.extend(f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist())
    lines.extend(
        f"{a} {b} {label}" for (a, b), label in zip(mesh.boundary_vertices.tolist(), mesh.boundary_labels.tolist())
    )
    try:
        path.write_text('\n'.join(lines) + '\n')
    except OSError as e:
        raise MeshException(f"Could not write mesh file {path}: {e}") from e


def read_mesh(path: Union[str, Path]) -> Mesh:
    """Reads a mesh written by write_mesh"""
    path = Path(path)
    try:
        raw_lines = path.read_text().splitlines()
    except OSError as e:
        raise MeshException(f"Could not read mesh file {path}: {e}") from e
    if not raw_lines or raw_lines[0].strip() != MESH_FILE_HEADER:
        raise MeshException(f"Mesh file {path} does not start with '{MESH_FILE_HEADER}'")
    names = {}
    data = []
    for line in raw_lines[1:]:
        stripped = line.strip()
        if stripped.startswith('# label'):
            tokens = stripped.split()
            names[int(tokens[2])] = tokens[3]
        elif stripped and not stripped.startswith('#'):
            data.append(stripped.split())
    try:
        num_vertices, num_triangles, num_boundary = (int(t) for t in data[0])
        vertex_rows = data[1:1 + num_vertices]
        triangle_rows = data[1 + num_vertices:1 + num_vertices + num_triangles]
        boundary_rows = data[1 + num_vertices + num_triangles:1 + num_vertices + num_triangles + num_boundary]
        vertices = [(float(x), float(y)) for x, y in vertex_rows]
        triangles = [(int(i), int(j), int(k)) for i, j, k in triangle_rows]
        labels = {_edge_key(int(a), int(b)): int(label) for a, b, label in boundary_rows}
    except (ValueError, IndexError) as e:
        raise MeshException(f"Malformed mesh file {path}: {e}") from e
    if len(vertices) != num_vertices or len(triangles) != num_triangles or len(labels) != num_boundary:
        raise MeshException(f"Mesh file {path} is truncated")
    return Mesh(vertices, triangles, labels, names)
