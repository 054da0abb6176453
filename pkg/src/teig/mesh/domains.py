"""Structured mesh generators for the benchmark domains.

Level ``l`` targets mesh size ``h = 2**(-3-l)``.  Straight-sided domains
(square, lshape, cube, cube_cavity) are exact uniform grid splits; curved
domains (disk, annulus, ball, cube_cylinder_hole) are polygonal
approximations carrying projector tags so refinement converges to the
true geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Mesh, MeshError, Projector, refine

_DOMAIN_DIM = {
    "disk": 2,
    "square": 2,
    "lshape": 2,
    "annulus": 2,
    "cube": 3,
    "cube_cavity": 3,
    "cube_cylinder_hole": 3,
    "ball": 3,
}

_DEFAULTS = {
    "disk": {"radius": 0.5},
    "square": {},
    "lshape": {},
    "annulus": {"inner_radius": 0.25, "radius": 0.5},
    "cube": {},
    "cube_cavity": {},
    "cube_cylinder_hole": {"radius": 0.25},
    "ball": {"radius": 1.0},
}

# Coarsest supported level per domain (h = 2**(-3-l) must resolve the geometry).
_MIN_LEVEL = {
    "disk": -2,
    "square": -2,
    "lshape": -2,
    "annulus": -2,
    "cube": -2,
    "cube_cavity": -1,
    "cube_cylinder_hole": -1,
    "ball": -2,
}


@dataclass(frozen=True)
class DomainSpec:
    """Named benchmark domain with geometric parameters.

    Defaults match the reference geometries: disk of radius 1/2 at the
    origin, unit square [0,1]^2, L-shape [-1/2,1/2]^2 minus the open
    lower-right quadrant, annulus with radii 1/4 and 1/2, unit cube,
    cube with the centered (1/4,3/4)^3 cavity, cube with a centered
    cylindrical hole of radius 1/4, and the unit ball.
    """

    name: str
    radius: float | None = None
    inner_radius: float | None = None

    def __post_init__(self):
        if self.name not in _DOMAIN_DIM:
            raise MeshError(
                f"unknown domain {self.name!r}; choose from {sorted(_DOMAIN_DIM)}"
            )
        defaults = _DEFAULTS[self.name]
        if self.radius is None and "radius" in defaults:
            object.__setattr__(self, "radius", defaults["radius"])
        if self.inner_radius is None and "inner_radius" in defaults:
            object.__setattr__(self, "inner_radius", defaults["inner_radius"])
        if self.radius is not None and self.radius <= 0:
            raise MeshError("radius must be positive")
        if self.inner_radius is not None:
            if self.inner_radius <= 0:
                raise MeshError("inner radius must be positive")
            if self.radius is not None and self.inner_radius >= self.radius:
                raise MeshError("annulus inner radius must be < outer radius")

    @property
    def dim(self) -> int:
        return _DOMAIN_DIM[self.name]


def mesh_size(level: int) -> float:
    """Target mesh size ``h = 2**(-3-level)``."""
    return 2.0 ** (-3 - level)


def generate(spec: DomainSpec, level: int) -> Mesh:
    """Generate a shape-regular mesh of the domain at the given level.

    The maximum edge length is bounded by a small constant times
    ``2**(-3-level)``.

    Raises
    ------
    MeshError
        If the level is below the domain's coarsest supported level.
    """
    if not isinstance(level, (int, np.integer)):
        raise MeshError("level must be an integer")
    if level < _MIN_LEVEL[spec.name]:
        raise MeshError(
            f"domain {spec.name!r} supports levels >= {_MIN_LEVEL[spec.name]}, got {level}"
        )
    h = mesh_size(level)
    builder = {
        "disk": _disk,
        "square": _square,
        "lshape": _lshape,
        "annulus": _annulus,
        "cube": _cube,
        "cube_cavity": _cube_cavity,
        "cube_cylinder_hole": _cube_cylinder_hole,
        "ball": _ball,
    }[spec.name]
    return builder(spec, h, level)


def _grid2d(m: int, lo: float, size: float, keep=None):
    """Uniform triangulation of a square: m x m cells, 2 triangles each."""
    coords = lo + size * np.arange(m + 1) / m
    xx, yy = np.meshgrid(coords, coords, indexing="ij")
    verts = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i, j):
        return i * (m + 1) + j

    cells = []
    for i in range(m):
        for j in range(m):
            if keep is not None and not keep(i, j):
                continue
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            cells.append((a, b, c))
            cells.append((a, c, d))
    used = np.unique(np.asarray(cells, dtype=np.int64))
    remap = -np.ones(len(verts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return verts[used], remap[np.asarray(cells, dtype=np.int64)]


def _square(spec, h, level):
    m = round(1.0 / h)
    verts, cells = _grid2d(m, 0.0, 1.0)
    return Mesh.from_arrays(2, verts, cells)


def _lshape(spec, h, level):
    m = round(1.0 / h)
    half = m // 2
    if 2 * half != m:
        raise MeshError("lshape requires an even grid")

    def keep(i, j):
        # remove the open quadrant x > 0, y < 0
        return not (i >= half and j < half)

    verts, cells = _grid2d(m, -0.5, 1.0, keep=keep)
    return Mesh.from_arrays(2, verts, cells)


def _disk(spec, h, level):
    """Structured polar fan: ring j holds 6j vertices at radius R*j/m."""
    R = spec.radius
    m = max(1, round(R / h))
    verts = [(0.0, 0.0)]
    ring_start = [0, 1]
    for j in range(1, m + 1):
        r = R * j / m
        ang = 2.0 * np.pi * np.arange(6 * j) / (6 * j)
        verts.extend(zip(r * np.cos(ang), r * np.sin(ang)))
        ring_start.append(ring_start[-1] + 6 * j)

    def rid(j, k):
        if j == 0:
            return 0
        return ring_start[j] + k % (6 * j)

    cells = []
    for j in range(1, m + 1):
        for s in range(6):
            for t in range(j):
                p0 = rid(j, s * j + t)
                p1 = rid(j, s * j + t + 1)
                q0 = rid(j - 1, s * (j - 1) + t)
                cells.append((p0, p1, q0))
                if t < j - 1:
                    q1 = rid(j - 1, s * (j - 1) + t + 1)
                    cells.append((q0, p1, q1))
    verts = np.asarray(verts)
    group = np.full(len(verts), -1, dtype=np.int32)
    group[ring_start[m] :] = 0
    proj = Projector("circle", (0.0, 0.0), R)
    return Mesh.from_arrays(2, verts, np.asarray(cells), group, (proj,))


def _annulus(spec, h, level):
    r_in, r_out = spec.inner_radius, spec.radius
    n_r = max(1, round((r_out - r_in) / h))
    n_t = 4 * max(2, math.ceil(2.0 * np.pi * r_out / h / 4.0))
    rr = r_in + (r_out - r_in) * np.arange(n_r + 1) / n_r
    ang = 2.0 * np.pi * np.arange(n_t) / n_t
    verts = np.column_stack(
        [np.outer(rr, np.cos(ang)).ravel(), np.outer(rr, np.sin(ang)).ravel()]
    )

    def vid(i, k):
        return i * n_t + k % n_t

    cells = []
    for i in range(n_r):
        for k in range(n_t):
            a, b = vid(i, k), vid(i, k + 1)
            c, d = vid(i + 1, k + 1), vid(i + 1, k)
            cells.append((a, b, c))
            cells.append((a, c, d))
    group = np.full(len(verts), -1, dtype=np.int32)
    group[:n_t] = 0
    group[n_r * n_t :] = 1
    projs = (
        Projector("circle", (0.0, 0.0), r_in),
        Projector("circle", (0.0, 0.0), r_out),
    )
    return Mesh.from_arrays(2, verts, np.asarray(cells), group, projs)


def _kuhn_cells(m: int, keep=None):
    """Six-tetrahedra (Kuhn) split of each voxel of an m^3 grid."""
    axes = [
        (0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0),
    ]

    def vid(i, j, k):
        return (i * (m + 1) + j) * (m + 1) + k

    cells = []
    for i in range(m):
        for j in range(m):
            for k in range(m):
                if keep is not None and not keep(i, j, k):
                    continue
                base = np.array([i, j, k])
                for perm in axes:
                    p = [base.copy()]
                    for ax in perm:
                        q = p[-1].copy()
                        q[ax] += 1
                        p.append(q)
                    cells.append(tuple(vid(*pt) for pt in p))
    return cells


def _cube_mesh(m: int, keep=None) -> Mesh:
    coords = np.arange(m + 1) / m
    xx, yy, zz = np.meshgrid(coords, coords, coords, indexing="ij")
    verts = np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])
    cells = np.asarray(_kuhn_cells(m, keep), dtype=np.int64)
    used = np.unique(cells)
    remap = -np.ones(len(verts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return Mesh.from_arrays(3, verts[used], remap[cells])


def _cube(spec, h, level):
    return _cube_mesh(round(1.0 / h))


def _cube_cavity(spec, h, level):
    m = round(1.0 / h)
    lo, hi = m // 4, 3 * m // 4
    if 4 * lo != m:
        raise MeshError("cube_cavity requires the grid to resolve x = 1/4")

    def keep(i, j, k):
        return not (lo <= i < hi and lo <= j < hi and lo <= k < hi)

    return _cube_mesh(m, keep)


def _ogrid_square_minus_circle(h: float, center, r: float):
    """Structured grid between a centered circle and the unit square boundary.

    Rays from the center at N equispaced angles (N a multiple of 8, so the
    square corners are hit exactly) are graded from the circle out to the
    square boundary.
    """
    N = 8 * max(1, round(0.5 / h))
    cx, cy = center
    ang = 2.0 * np.pi * np.arange(N) / N
    u = np.column_stack([np.cos(ang), np.sin(ang)])
    t_sq = 0.5 / np.maximum(np.abs(u[:, 0]), np.abs(u[:, 1]))
    m_r = max(1, math.ceil((t_sq.max() - r) / h))
    inner = np.array(center) + r * u
    outer = np.array(center) + t_sq[:, None] * u
    verts = np.concatenate(
        [inner + (outer - inner) * (j / m_r) for j in range(m_r + 1)]
    )

    def vid(j, k):
        return j * N + k % N

    cells = []
    for j in range(m_r):
        for k in range(N):
            a, b = vid(j, k), vid(j, k + 1)
            c, d = vid(j + 1, k + 1), vid(j + 1, k)
            cells.append((a, b, c))
            cells.append((a, c, d))
    return np.asarray(verts), np.asarray(cells, dtype=np.int64), N


def _split_prism(b0, b1, b2, t0, t1, t2):
    """Cut a prism into 3 tets, quad diagonals through the lowest index.

    Bottom indices are assumed smaller than top ones (extrusion layers),
    so shared quad faces are cut identically by neighboring prisms.
    """
    b, t = [b0, b1, b2], [t0, t1, t2]
    r = int(np.argmin(b))
    b = b[r:] + b[:r]
    t = t[r:] + t[:r]
    if b[1] < b[2]:
        return [
            (b[0], b[1], b[2], t[2]),
            (b[0], b[1], t[2], t[1]),
            (b[0], t[1], t[2], t[0]),
        ]
    return [
        (b[0], b[1], b[2], t[1]),
        (b[0], b[2], t[1], t[2]),
        (b[0], t[1], t[2], t[0]),
    ]


def _cube_cylinder_hole(spec, h, level):
    r = spec.radius
    v2, c2, N = _ogrid_square_minus_circle(h, (0.5, 0.5), r)
    nv2 = len(v2)
    nz = round(1.0 / h)
    z = np.arange(nz + 1) / nz
    verts = np.column_stack(
        [
            np.tile(v2[:, 0], nz + 1),
            np.tile(v2[:, 1], nz + 1),
            np.repeat(z, nv2),
        ]
    )
    cells = []
    for layer in range(nz):
        off0, off1 = layer * nv2, (layer + 1) * nv2
        for tri in c2:
            cells.extend(
                _split_prism(
                    off0 + tri[0], off0 + tri[1], off0 + tri[2],
                    off1 + tri[0], off1 + tri[1], off1 + tri[2],
                )
            )
    group = np.full(len(verts), -1, dtype=np.int32)
    on_circle = np.tile(np.arange(nv2) < N, nz + 1)
    group[on_circle] = 0
    proj = Projector("cylinder", (0.5, 0.5, 0.0), r, axis=(0.0, 0.0, 1.0))
    return Mesh.from_arrays(3, verts, np.asarray(cells, dtype=np.int64), group, (proj,))


def _ball(spec, h, level):
    """Octahedron split into 8 tets, red-refined with sphere projection."""
    R = spec.radius
    verts = np.array(
        [
            [0.0, 0.0, 0.0],
            [R, 0, 0], [-R, 0, 0], [0, R, 0], [0, -R, 0], [0, 0, R], [0, 0, -R],
        ]
    )
    cells = []
    for sx in (1, 2):
        for sy in (3, 4):
            for sz in (5, 6):
                cells.append((0, sx, sy, sz))
    group = np.full(7, -1, dtype=np.int32)
    group[1:] = 0
    proj = Projector("sphere", (0.0, 0.0, 0.0), R)
    mesh = Mesh.from_arrays(3, verts, np.asarray(cells, dtype=np.int64), group, (proj,))
    # max edge R*sqrt(2); halve until below the target size
    n_ref = max(0, math.ceil(math.log2(R * math.sqrt(2.0) / h)))
    for _ in range(n_ref):
        mesh = refine(mesh)
    return mesh
