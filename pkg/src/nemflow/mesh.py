"""Structured triangulations of rectangles."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class TriMesh:
    """Conforming triangle mesh with precomputed P1 geometry.

    Attributes
    ----------
    vertices : (n_nodes, 2) float array
    triangles : (n_elems, 3) int array, counter-clockwise
    boundary_nodes : sorted int array of vertices on the domain boundary
    element_areas : (n_elems,) float array
    element_gradients : (n_elems, 3, 2) float array
        Constant gradient of each local barycentric basis function.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_nodes: np.ndarray
    element_areas: np.ndarray = field(repr=False)
    element_gradients: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_elems(self) -> int:
        return self.triangles.shape[0]

    @property
    def area(self) -> float:
        return float(self.element_areas.sum())

    @property
    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = False
        return np.flatnonzero(mask)

    @property
    def h(self) -> float:
        return mesh_size(self)

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique undirected edges and the number of triangles sharing each."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0, return_counts=True)


def from_arrays(vertices, triangles, boundary_nodes=None) -> TriMesh:
    """Build a :class:`TriMesh` from raw arrays, reorienting triangles CCW.

    When ``boundary_nodes`` is omitted they are taken from edges that belong
    to a single triangle.
    """
    vertices = np.ascontiguousarray(vertices, dtype=float)
    triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
    if triangles.size:
        p = vertices[triangles]
        det = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
               - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
        flip = det < 0
        triangles[flip] = triangles[flip][:, [0, 2, 1]]
    areas, grads = _p1_geometry(vertices, triangles)
    if np.any(areas <= 0.0):
        raise ValueError("degenerate triangle in mesh")
    if boundary_nodes is None:
        if triangles.size:
            e = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
            e.sort(axis=1)
            uniq, counts = np.unique(e, axis=0, return_counts=True)
            boundary_nodes = np.unique(uniq[counts == 1])
        else:
            boundary_nodes = np.empty(0, dtype=np.int64)
    boundary_nodes = np.unique(np.asarray(boundary_nodes, dtype=np.int64))
    return TriMesh(vertices, triangles, boundary_nodes, areas, grads)


def _p1_geometry(vertices: np.ndarray, triangles: np.ndarray):
    p = vertices[triangles]  # (ne, 3, 2)
    x, y = p[..., 0], p[..., 1]
    det = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    grads = np.empty(p.shape)
    # grad(lambda_i) = (y_j - y_k, x_k - x_j) / det with (i, j, k) cyclic;
    # degenerate triangles are rejected by the caller
    with np.errstate(divide="ignore", invalid="ignore"):
        for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            grads[:, i, 0] = (y[:, j] - y[:, k]) / det
            grads[:, i, 1] = (x[:, k] - x[:, j]) / det
    return 0.5 * det, grads


def build_uniform_triangulation(domain=(-1.0, 1.0, -1.0, 1.0), nx: int = 31, ny: int = 31) -> TriMesh:
    """Split an ``nx`` by ``ny`` grid of the rectangle ``(x0, x1, y0, y1)``.

    Every cell is cut along its lower-left to upper-right diagonal.
    """
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be >= 1")
    x0, x1, y0, y1 = map(float, domain)
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"empty domain {domain}")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)  # row index = j (y), column = i (x)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    n00 = j * (nx + 1) + i
    n10 = n00 + 1
    n01 = n00 + (nx + 1)
    n11 = n01 + 1
    lower = np.column_stack([n00, n10, n11])
    upper = np.column_stack([n00, n11, n01])
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    ii, jj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
    on_bnd = (ii == 0) | (ii == nx) | (jj == 0) | (jj == ny)
    boundary = np.flatnonzero(on_bnd.ravel())

    areas, grads = _p1_geometry(vertices, triangles)
    return TriMesh(vertices, triangles, boundary, areas, grads)


def mesh_size(mesh: TriMesh) -> float:
    """Largest element diameter."""
    if mesh.n_elems == 0:
        raise ValueError("mesh has no elements")
    p = mesh.vertices[mesh.triangles]
    lengths = np.linalg.norm(p - np.roll(p, -1, axis=1), axis=2)
    return float(lengths.max())


def write_vtk_mesh(mesh: TriMesh, path, point_data=None, title="nemflow mesh") -> Path:
    """Write the mesh (and optional point data) as legacy ASCII VTK.

    ``point_data`` maps names to arrays of shape ``(n_nodes,)`` (scalars) or
    ``(n_nodes, 2|3)`` (vectors, padded to three components).
    """
    path = Path(path)
    n, ne = mesh.n_nodes, mesh.n_elems
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {n} double"]
    lines += [f"{x!r} {y!r} 0.0" for x, y in mesh.vertices.tolist()]
    lines.append(f"CELLS {ne} {4 * ne}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    lines.append(f"CELL_TYPES {ne}")
    lines += ["5"] * ne
    if point_data:
        lines.append(f"POINT_DATA {n}")
        for name, values in point_data.items():
            values = np.asarray(values, dtype=float)
            if values.ndim == 1:
                lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
                lines += [repr(v) for v in values.tolist()]
            else:
                pad = np.zeros((n, 3))
                pad[:, : values.shape[1]] = values
                lines.append(f"VECTORS {name} double")
                lines += [f"{a!r} {b!r} {c!r}" for a, b, c in pad.tolist()]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path
