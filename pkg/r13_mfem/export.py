"""
File output of solutions and tables: legacy VTK ASCII unstructured grids and plain CSV.

Quadratic fields are sampled on the once-subdivided triangulation whose points are the mesh vertices followed by
the edge midpoints, so every triangle becomes four linear cells.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np

from r13_mfem.elements import edge_barycentric
from r13_mfem.exceptions import R13Exception
from r13_mfem.mesh import Mesh
from r13_mfem.solver import Solution
from r13_mfem.spaces import FEFunction

logger = logging.getLogger(__name__)

VTK_HEADER = '# vtk DataFile Version 3.0'
VTK_TRIANGLE = 5


def subdivided_grid(mesh: Mesh):
    """
    Points (V + E, 2) and linear triangles (4T, 3) of the subdivided mesh.  The midpoint of edge e is point V + e.
    """
    midpoints = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    points = np.vstack([mesh.vertices, midpoints])
    v = mesh.triangles
    m = mesh.num_vertices + mesh.triangle_edges
    cells = np.concatenate([
        np.stack([v[:, 0], m[:, 2], m[:, 1]], axis=1),
        np.stack([v[:, 1], m[:, 0], m[:, 2]], axis=1),
        np.stack([v[:, 2], m[:, 1], m[:, 0]], axis=1),
        np.stack([m[:, 0], m[:, 1], m[:, 2]], axis=1),
    ])
    return points, cells


def sample_on_grid(function: FEFunction) -> np.ndarray:
    """Values of a continuous field at the vertices and edge midpoints, shape (V + E, components)"""
    mesh = function.space.mesh
    vertex_triangle = np.zeros(mesh.num_vertices, dtype=np.int64)
    vertex_local = np.zeros(mesh.num_vertices, dtype=np.int64)
    # any triangle touching a vertex will do for a continuous field
    for k in range(3):
        vertex_triangle[mesh.triangles[:, k]] = np.arange(mesh.num_triangles)
        vertex_local[mesh.triangles[:, k]] = k
    vertex_values, _ = function.evaluate_in_cells(vertex_triangle, np.eye(3)[vertex_local])
    edge_triangle = mesh.edge_triangles[:, 0]
    edge_bary = np.stack([edge_barycentric(int(k), 0.5) for k in range(3)])[mesh.edge_local_index[:, 0]]
    edge_values, _ = function.evaluate_in_cells(edge_triangle, edge_bary)
    return np.vstack([vertex_values, edge_values])


def _format(value: float) -> str:
    return repr(float(value))


def write_vtk(solution: Solution, path: Union[str, Path], title: str = 'r13_mfem solution') -> Path:
    """
    Writes theta, p and the sigma components as scalars and u, s as vectors on the subdivided grid.

    :param solution: The solution
    :param path: Output file path
    :param title: Single-line dataset title
    :return: The path written
    """
    path = Path(path)
    points, cells = subdivided_grid(solution.mesh)
    lines = [VTK_HEADER, title.replace('\n', ' '), 'ASCII', 'DATASET UNSTRUCTURED_GRID',
             f"POINTS {len(points)} double"]
    lines.extend(f"{_format(x)} {_format(y)} 0" for x, y in points)
    lines.append(f"CELLS {len(cells)} {4 * len(cells)}")
    lines.extend(f"3 {a} {b} {c}" for a, b, c in cells)
    lines.append(f"CELL_TYPES {len(cells)}")
    lines.extend([str(VTK_TRIANGLE)] * len(cells))
    lines.append(f"POINT_DATA {len(points)}")
    sigma = sample_on_grid(solution.sigma)
    scalars = {'theta': sample_on_grid(solution.theta)[:, 0], 'p': sample_on_grid(solution.p)[:, 0],
               'sigma_xx': sigma[:, 0], 'sigma_xy': sigma[:, 1], 'sigma_yy': sigma[:, 2]}
    for name, values in scalars.items():
        lines.append(f"SCALARS {name} double 1")
        lines.append('LOOKUP_TABLE default')
        lines.extend(_format(v) for v in values)
    for name in ('u', 's'):
        values = sample_on_grid(solution[name])
        lines.append(f"VECTORS {name} double")
        lines.extend(f"{_format(x)} {_format(y)} 0" for x, y in values)
    try:
        path.write_text('\n'.join(lines) + '\n')
    except OSError as e:
        raise R13Exception(f"Could not write VTK file {path}: {e}") from None
    logger.debug("Wrote %d points and %d cells to %s", len(points), len(cells), path)
    return path


@dataclass
class VtkData:
    points: np.ndarray
    cells: np.ndarray
    cell_types: np.ndarray
    point_data: Dict[str, np.ndarray] = field(default_factory=dict)


def read_vtk(path: Union[str, Path]) -> VtkData:
    """Reads the legacy ASCII unstructured grids written by write_vtk"""
    path = Path(path)
    try:
        tokens = path.read_text().split('\n')
    except OSError as e:
        raise R13Exception(f"Could not read VTK file {path}: {e}") from None
    if not tokens or tokens[0].strip() != VTK_HEADER:
        raise R13Exception(f"{path} is not a legacy VTK file")
    words = ' '.join(tokens[3:]).split()
    position = 0

    def take(count: int) -> List[str]:
        nonlocal position
        chunk = words[position:position + count]
        if len(chunk) < count:
            raise R13Exception(f"Unexpected end of VTK file {path}")
        position += count
        return chunk

    points = cells = cell_types = None
    point_data: Dict[str, np.ndarray] = {}
    num_points = 0
    while position < len(words):
        keyword = take(1)[0]
        if keyword == 'DATASET':
            take(1)
        elif keyword == 'POINTS':
            num_points = int(take(2)[0])
            points = np.array(take(3 * num_points), dtype=float).reshape(num_points, 3)
        elif keyword == 'CELLS':
            num_cells, size = (int(w) for w in take(2))
            raw = np.array(take(size), dtype=np.int64).reshape(num_cells, -1)
            cells = raw[:, 1:]
        elif keyword == 'CELL_TYPES':
            count = int(take(1)[0])
            cell_types = np.array(take(count), dtype=np.int64)
        elif keyword == 'POINT_DATA':
            num_points = int(take(1)[0])
        elif keyword == 'SCALARS':
            name, _, _ = take(3)
            take(2)  # LOOKUP_TABLE default
            point_data[name] = np.array(take(num_points), dtype=float)
        elif keyword == 'VECTORS':
            name, _ = take(2)
            point_data[name] = np.array(take(3 * num_points), dtype=float).reshape(num_points, 3)
        else:
            raise R13Exception(f"Unsupported VTK keyword '{keyword}' in {path}")
    if points is None or cells is None:
        raise R13Exception(f"VTK file {path} has no grid")
    return VtkData(points, cells, cell_types, point_data)


def csv_text(column_names: Sequence[str], rows: Sequence[Sequence]) -> str:
    """Header row plus one line per row; floats use round-trip formatting"""
    def cell(value) -> str:
        if isinstance(value, (float, np.floating)):
            return _format(float(value))
        return str(value)
    response = ','.join(column_names) + '\n'
    for row in rows:
        response += ','.join(cell(v) for v in row) + '\n'
    return response


def write_csv(path: Union[str, Path], column_names: Sequence[str], rows: Sequence[Sequence]) -> Path:
    path = Path(path)
    try:
        path.write_text(csv_text(column_names, rows))
    except OSError as e:
        raise R13Exception(f"Could not write CSV file {path}: {e}") from None
    return path
