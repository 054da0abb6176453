"""Simplicial mesh container, uniform red refinement, and quality measures.

A mesh is immutable after construction: the vertex/cell arrays are locked,
and :func:`refine` returns a new mesh.  Curved boundaries are tracked by
per-vertex projector groups so refinement can push new boundary midpoints
back onto circles, spheres or cylinders.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

_DEGENERATE_REL_TOL = 1e-14


class MeshError(Exception):
    """Invalid mesh topology or geometry."""


@dataclass(frozen=True)
class Projector:
    """Projection of boundary vertices onto a curved surface.

    ``circle`` and ``sphere`` project radially from ``center``; ``cylinder``
    projects radially from the axis line ``center + t*axis`` (``axis`` is a
    unit vector), keeping the axial coordinate.
    """

    kind: str  # "circle" | "sphere" | "cylinder"
    center: tuple[float, ...]
    radius: float
    axis: tuple[float, ...] | None = None

    def project(self, points: np.ndarray) -> np.ndarray:
        """Project an (n, d) array of points onto the surface."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        c = np.asarray(self.center, dtype=float)
        if self.kind in ("circle", "sphere"):
            rel = pts - c
            norms = np.linalg.norm(rel, axis=1, keepdims=True)
            if np.any(norms == 0.0):
                raise MeshError("cannot project the center point onto %s" % self.kind)
            return c + rel * (self.radius / norms)
        if self.kind == "cylinder":
            a = np.asarray(self.axis, dtype=float)
            a = a / np.linalg.norm(a)
            rel = pts - c
            axial = rel @ a
            radial = rel - np.outer(axial, a)
            norms = np.linalg.norm(radial, axis=1, keepdims=True)
            if np.any(norms == 0.0):
                raise MeshError("cannot project an on-axis point onto cylinder")
            return c + np.outer(axial, a) + radial * (self.radius / norms)
        raise MeshError(f"unknown projector kind {self.kind!r}")


@dataclass(frozen=True)
class Mesh:
    """Conforming simplicial mesh in 2 or 3 dimensions.

    Attributes
    ----------
    dim : int
        Spatial dimension, 2 or 3.
    vertices : (n_v, dim) float array
    cells : (n_cells, dim+1) int array
        Vertex indices; every cell has positive signed volume.
    boundary_vertex : (n_v,) bool array
        True exactly for vertices lying on a boundary facet.
    projector_group : (n_v,) int array
        Index into ``projectors`` for vertices bound to a curved surface,
        -1 otherwise.
    projectors : tuple of Projector
    reoriented : int
        Number of cells whose input orientation was flipped on construction.
    """

    dim: int
    vertices: np.ndarray
    cells: np.ndarray
    boundary_vertex: np.ndarray
    projector_group: np.ndarray = field(default=None)  # type: ignore[assignment]
    projectors: tuple[Projector, ...] = ()
    reoriented: int = 0

    def __post_init__(self):
        if self.projector_group is None:
            object.__setattr__(
                self, "projector_group", np.full(len(self.vertices), -1, dtype=np.int32)
            )
        for arr in (self.vertices, self.cells, self.boundary_vertex, self.projector_group):
            arr.flags.writeable = False

    @classmethod
    def from_arrays(
        cls,
        dim: int,
        vertices,
        cells,
        projector_group=None,
        projectors: tuple[Projector, ...] = (),
    ) -> "Mesh":
        """Build a validated mesh, normalizing cell orientation.

        Cells with negative signed volume are reoriented (last two vertices
        swapped); their count is recorded in ``reoriented``.  Boundary flags
        are recomputed from facet incidence.

        Raises
        ------
        MeshError
            On out-of-range indices, degenerate cells, or non-manifold
            facet incidence.
        """
        if dim not in (2, 3):
            raise MeshError(f"dim must be 2 or 3, got {dim}")
        vertices = np.ascontiguousarray(vertices, dtype=float)
        cells = np.ascontiguousarray(cells, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != dim:
            raise MeshError(f"vertices must be (n_v, {dim}), got {vertices.shape}")
        if cells.ndim != 2 or cells.shape[1] != dim + 1:
            raise MeshError(f"cells must be (n_cells, {dim + 1}), got {cells.shape}")
        n_v = len(vertices)
        if cells.size and (cells.min() < 0 or cells.max() >= n_v):
            raise MeshError("cell vertex index out of range")
        if len(cells) == 0:
            raise MeshError("mesh has no cells")

        vols = signed_volumes(vertices, cells, dim)
        scale = np.abs(vols).max()
        if np.any(np.abs(vols) <= _DEGENERATE_REL_TOL * scale):
            bad = int(np.argmin(np.abs(vols)))
            raise MeshError(f"degenerate cell {bad} (volume {vols[bad]:.3e})")
        flipped = vols < 0.0
        if flipped.any():
            cells = cells.copy()
            cells[flipped, -2], cells[flipped, -1] = (
                cells[flipped, -1],
                cells[flipped, -2].copy(),
            )
        reoriented = int(flipped.sum())

        facets, counts = _facet_counts(cells, dim)
        if counts.max() > 2:
            raise MeshError("non-manifold facet shared by more than 2 cells")
        bfacets = facets[counts == 1]
        boundary_vertex = np.zeros(n_v, dtype=bool)
        boundary_vertex[np.unique(bfacets)] = True
        if not boundary_vertex.any():
            raise MeshError("mesh has no boundary facets")

        if projector_group is None:
            projector_group = np.full(n_v, -1, dtype=np.int32)
        else:
            projector_group = np.asarray(projector_group, dtype=np.int32).copy()
        return cls(
            dim=dim,
            vertices=vertices,
            cells=cells,
            boundary_vertex=boundary_vertex,
            projector_group=projector_group,
            projectors=tuple(projectors),
            reoriented=reoriented,
        )

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def volumes(self) -> np.ndarray:
        """Signed cell volumes (all positive after normalization)."""
        return signed_volumes(self.vertices, self.cells, self.dim)

    def total_volume(self) -> float:
        return float(self.volumes().sum())

    def boundary_facets(self) -> np.ndarray:
        """Facets (sorted vertex tuples) incident to exactly one cell."""
        facets, counts = _facet_counts(self.cells, self.dim)
        return facets[counts == 1]

    def max_edge_length(self) -> float:
        edges = _cell_edges(self.cells)
        diffs = self.vertices[edges[:, 0]] - self.vertices[edges[:, 1]]
        return float(np.sqrt((diffs**2).sum(axis=1)).max())


def signed_volumes(vertices: np.ndarray, cells: np.ndarray, dim: int) -> np.ndarray:
    """Signed volume of each cell (area in 2D)."""
    p = vertices[cells]
    edges = p[:, 1:, :] - p[:, :1, :]
    if dim == 2:
        det = edges[:, 0, 0] * edges[:, 1, 1] - edges[:, 0, 1] * edges[:, 1, 0]
        return det / 2.0
    det = np.linalg.det(edges)
    return det / 6.0


_FACET_LOCAL = {
    2: np.array([[1, 2], [0, 2], [0, 1]]),
    3: np.array([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]]),
}

_EDGE_LOCAL = {
    3: np.array([[0, 1], [0, 2], [1, 2]]),
    4: np.array([[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]]),
}


def _facet_counts(cells: np.ndarray, dim: int):
    """Unique sorted facets and how many cells share each."""
    local = _FACET_LOCAL[dim]
    facets = cells[:, local].reshape(-1, dim)
    facets = np.sort(facets, axis=1)
    uniq, counts = np.unique(facets, axis=0, return_counts=True)
    return uniq, counts


def _cell_edges(cells: np.ndarray) -> np.ndarray:
    """Unique sorted vertex pairs appearing as cell edges."""
    local = _EDGE_LOCAL[cells.shape[1]]
    edges = cells[:, local].reshape(-1, 2)
    edges = np.sort(edges, axis=1)
    return np.unique(edges, axis=0)


def interior_facet_check(mesh: Mesh) -> None:
    """Raise unless every facet is shared by exactly 1 or 2 cells."""
    _, counts = _facet_counts(mesh.cells, mesh.dim)
    if not np.all((counts == 1) | (counts == 2)):
        raise MeshError("facet incidence violated")


def shape_regularity(mesh: Mesh) -> float:
    """Minimum inradius / diameter ratio over all cells."""
    p = mesh.vertices[mesh.cells]
    vols = np.abs(signed_volumes(mesh.vertices, mesh.cells, mesh.dim))
    local = _EDGE_LOCAL[mesh.dim + 1]
    evecs = p[:, local[:, 1], :] - p[:, local[:, 0], :]
    elens = np.sqrt((evecs**2).sum(axis=2))
    diam = elens.max(axis=1)
    if mesh.dim == 2:
        # inradius = 2*area / perimeter
        inr = 2.0 * vols / elens.sum(axis=1)
    else:
        # inradius = 3*volume / total face area
        fl = _FACET_LOCAL[3]
        a = p[:, fl[:, 1], :] - p[:, fl[:, 0], :]
        b = p[:, fl[:, 2], :] - p[:, fl[:, 0], :]
        areas = 0.5 * np.linalg.norm(np.cross(a, b), axis=2)
        inr = 3.0 * vols / areas.sum(axis=1)
    return float((inr / diam).min())


def refine(mesh: Mesh) -> Mesh:
    """Uniform red refinement halving the mesh size.

    Triangles split into 4 via edge midpoints; tetrahedra into 8 (4 corner
    tets plus a central octahedron cut along its shortest diagonal, ties
    broken by lowest vertex index).  Midpoints of boundary edges whose
    endpoints share a projector group are projected onto that surface.
    """
    verts = mesh.vertices
    cells = mesh.cells
    edges = _cell_edges(cells)
    n_v = len(verts)

    edge_id = {}
    for k, (a, b) in enumerate(edges):
        edge_id[(int(a), int(b))] = n_v + k
    midpoints = 0.5 * (verts[edges[:, 0]] + verts[edges[:, 1]])

    # Boundary edges: edges contained in a boundary facet.
    bfacets = mesh.boundary_facets()
    if mesh.dim == 2:
        bedges = {tuple(f) for f in bfacets}
    else:
        fe = bfacets[:, _EDGE_LOCAL[3]].reshape(-1, 2)
        fe = np.sort(fe, axis=1)
        bedges = {tuple(e) for e in np.unique(fe, axis=0)}

    group = mesh.projector_group
    mid_group = np.full(len(edges), -1, dtype=np.int32)
    for k, (a, b) in enumerate(edges):
        key = (int(a), int(b))
        if key in bedges and group[a] >= 0 and group[a] == group[b]:
            mid_group[k] = group[a]
    for gid in np.unique(mid_group[mid_group >= 0]):
        sel = mid_group == gid
        midpoints[sel] = mesh.projectors[gid].project(midpoints[sel])

    new_verts = np.vstack([verts, midpoints])
    new_group = np.concatenate([group, mid_group])

    if mesh.dim == 2:
        new_cells = _refine_triangles(cells, edge_id)
    else:
        new_cells = _refine_tets(cells, edge_id, new_verts)

    return Mesh.from_arrays(
        mesh.dim, new_verts, new_cells, projector_group=new_group, projectors=mesh.projectors
    )


def _refine_triangles(cells: np.ndarray, edge_id: dict) -> np.ndarray:
    out = np.empty((4 * len(cells), 3), dtype=np.int64)
    for i, (v0, v1, v2) in enumerate(cells):
        m01 = edge_id[(min(v0, v1), max(v0, v1))]
        m02 = edge_id[(min(v0, v2), max(v0, v2))]
        m12 = edge_id[(min(v1, v2), max(v1, v2))]
        out[4 * i : 4 * i + 4] = [
            (v0, m01, m02),
            (v1, m12, m01),
            (v2, m02, m12),
            (m01, m12, m02),
        ]
    return out


# Octahedron tets around a diagonal (a, b): equator cycle of the remaining
# midpoints, consecutive pairs forming a tet with the diagonal.
_OCT_EQUATOR = {
    0: (1, 3, 4, 2),  # diagonal m01-m23: equator m02, m12, m13, m03
    1: (0, 3, 5, 2),  # diagonal m02-m13: equator m01, m12, m23, m03
    2: (0, 4, 5, 1),  # diagonal m03-m12: equator m01, m13, m23, m02
}
_OCT_DIAG = {0: (0, 5), 1: (1, 4), 2: (2, 3)}  # midpoint-local index pairs


def _refine_tets(cells: np.ndarray, edge_id: dict, verts: np.ndarray) -> np.ndarray:
    # midpoint order per cell: m01, m02, m03, m12, m13, m23
    pairs = _EDGE_LOCAL[4]
    out = np.empty((8 * len(cells), 4), dtype=np.int64)
    for i, cell in enumerate(cells):
        m = [
            edge_id[(min(cell[a], cell[b]), max(cell[a], cell[b]))]
            for a, b in pairs
        ]
        v0, v1, v2, v3 = cell
        corner = [
            (v0, m[0], m[1], m[2]),
            (v1, m[0], m[3], m[4]),
            (v2, m[1], m[3], m[5]),
            (v3, m[2], m[4], m[5]),
        ]
        # shortest of the three octahedron diagonals; ties -> lowest vertex index
        best = None
        for choice in (0, 1, 2):
            a, b = _OCT_DIAG[choice]
            d2 = float(((verts[m[a]] - verts[m[b]]) ** 2).sum())
            key = (d2, min(m[a], m[b]), max(m[a], m[b]))
            if best is None or key < best[0]:
                best = (key, choice)
        choice = best[1]
        da, db = _OCT_DIAG[choice]
        eq = _OCT_EQUATOR[choice]
        octa = [
            (m[da], m[db], m[eq[k]], m[eq[(k + 1) % 4]])
            for k in range(4)
        ]
        out[8 * i : 8 * i + 8] = corner + octa
    return out
