"""Sparse matrix assembly for the mixed P1 x P0^d x P1 discretization.

All integrands are piecewise constant or P1 products, so one-point
quadrature and the exact simplex mass rule make every integral exact.
The piecewise-constant vector space uses a component-major dof layout
(all x-dofs, then y, then z), which makes its weighted mass matrix a
Kronecker product ``W_mass (x) diag(cell volumes)`` with a closed-form
inverse.

Assembly is deterministic: identical meshes produce bit-identical
sparse structures and values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .material import MaterialModel
from .mesh import Mesh

_DEGENERATE_VOL = 1e-300


class AssemblyError(ValueError):
    """Mesh/material combination that cannot be assembled."""


@dataclass(frozen=True)
class DofMap:
    """Index maps between mesh entities and the three dof blocks.

    P1 dofs on all vertices are numbered by vertex index; interior
    (homogeneous Dirichlet) dofs by ``interior_index``.  The
    piecewise-constant vector dof for component ``c`` on cell ``t`` is
    ``c * n_hat_t + t``.
    """

    dim: int
    n_e: int
    n_e0: int
    n_hat_t: int
    interior_index: np.ndarray  # (n_e,) int, -1 on the boundary
    interior_vertices: np.ndarray  # (n_e0,) int

    @property
    def n_t(self) -> int:
        return self.dim * self.n_hat_t

    @property
    def n_full(self) -> int:
        """Size of the undeflated block pencil (two multiplier rows)."""
        return self.n_e0 + self.n_t + self.n_e + 2

    @property
    def n_reduced(self) -> int:
        """Size of the deflated pencil."""
        return self.n_e0 + self.n_e + 2


def build_dofmap(mesh: Mesh) -> DofMap:
    interior = np.nonzero(~mesh.boundary_vertex)[0]
    idx = np.full(mesh.n_vertices, -1, dtype=np.int64)
    idx[interior] = np.arange(len(interior))
    return DofMap(
        dim=mesh.dim,
        n_e=mesh.n_vertices,
        n_e0=len(interior),
        n_hat_t=mesh.n_cells,
        interior_index=idx,
        interior_vertices=interior,
    )


def element_geometry(mesh: Mesh, cell: int) -> tuple[float, np.ndarray]:
    """Volume and constant P1 basis gradients of one cell.

    The gradients are returned as a (dim+1, dim) array ordered like the
    cell's vertices; they sum to zero (partition of unity).
    """
    vols, grads = _geometry(mesh.vertices, mesh.cells[cell : cell + 1], mesh.dim)
    if vols[0] <= _DEGENERATE_VOL:
        raise AssemblyError(f"degenerate cell {cell} (volume {vols[0]:.3e})")
    return float(vols[0]), grads[0]


def _geometry(vertices: np.ndarray, cells: np.ndarray, dim: int):
    """Vectorized volumes and P1 gradients for all cells."""
    p = vertices[cells]
    E = p[:, 1:, :] - p[:, :1, :]  # rows are edge vectors from vertex 0
    if dim == 2:
        det = E[:, 0, 0] * E[:, 1, 1] - E[:, 0, 1] * E[:, 1, 0]
        vols = det / 2.0
    else:
        det = np.linalg.det(E)
        vols = det / 6.0
    invE = np.linalg.inv(E)
    grads = np.empty((len(cells), dim + 1, dim))
    # grad of barycentric coordinate i (i >= 1) is the (i-1)-th column of inv(E)
    grads[:, 1:, :] = np.transpose(invE, (0, 2, 1))
    grads[:, 0, :] = -grads[:, 1:, :].sum(axis=1)
    return vols, grads


def _accumulate(rows, cols, vals, shape) -> sp.csr_matrix:
    rows = np.asarray(rows).ravel()
    cols = np.asarray(cols).ravel()
    vals = np.asarray(vals).ravel()
    keep = (rows >= 0) & (cols >= 0)
    mat = sp.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=shape)
    return mat.tocsr()


@dataclass(frozen=True)
class Table1:
    """The stiffness, coupling, mass, and constraint blocks.

    Entries follow the regime's weight triple: ``K_P`` is the weighted
    interior P1 stiffness, ``F_P`` couples the constant vector fields to
    interior P1 gradients, ``M_P`` is the weighted P0^d mass (Kronecker),
    ``G`` pairs all-vertex P1 gradients with the constant fields, ``X``
    and ``Y`` are exact P1 mass blocks, and ``alpha``/``beta`` hold the
    zero-mean constraint functionals.
    """

    K_P: sp.csr_matrix
    F_P: sp.csr_matrix
    M_P: sp.csr_matrix
    G: sp.csr_matrix
    X: sp.csr_matrix
    Y: sp.csr_matrix
    alpha: np.ndarray
    beta: np.ndarray
    dofmap: DofMap
    volumes: np.ndarray
    material: MaterialModel


def assemble_table1(mesh: Mesh, material: MaterialModel) -> Table1:
    """Assemble all blocks of the mixed discretization.

    Raises
    ------
    AssemblyError
        If the material dimension mismatches the mesh, or if the mesh has
        no interior vertices.
    """
    if material.dim != mesh.dim:
        raise AssemblyError(
            f"material is {material.dim}D but the mesh is {mesh.dim}D"
        )
    dm = build_dofmap(mesh)
    if dm.n_e0 == 0:
        raise AssemblyError("mesh has no interior vertices")
    d = mesh.dim
    cells = mesh.cells
    vols, grads = _geometry(mesh.vertices, cells, d)

    iidx = dm.interior_index[cells]  # (n, d+1), -1 on boundary
    aidx = cells  # all-vertex dofs are vertex ids
    nloc = d + 1
    rows_ii = np.broadcast_to(iidx[:, :, None], (len(cells), nloc, nloc))
    cols_ii = np.broadcast_to(iidx[:, None, :], (len(cells), nloc, nloc))
    cols_ia = np.broadcast_to(aidx[:, None, :], (len(cells), nloc, nloc))

    loc = np.einsum("nid,de,nje->nij", grads, material.W_grad, grads) * vols[:, None, None]
    loc = 0.5 * (loc + loc.transpose(0, 2, 1))
    K_P = _accumulate(rows_ii, cols_ii, loc, (dm.n_e0, dm.n_e0))

    # F_P[i, (c, t)] = vol_t * grads[t, i, :] @ W_cross[:, c]
    gw = grads @ material.W_cross * vols[:, None, None]  # (n, d+1, d)
    t_ids = np.arange(len(cells))
    p0_cols = (np.arange(d)[None, None, :] * dm.n_hat_t + t_ids[:, None, None])
    F_P = _accumulate(
        np.broadcast_to(iidx[:, :, None], gw.shape),
        np.broadcast_to(p0_cols, gw.shape),
        gw,
        (dm.n_e0, dm.n_t),
    )

    M_P = sp.kron(sp.csr_matrix(material.W_mass), sp.diags(vols), format="csr")

    # G[(c, t), j] = vol_t * grads[t, j, c]
    gv = grads * vols[:, None, None]  # (n, d+1, d)
    G = _accumulate(
        np.broadcast_to(p0_cols, gv.shape).transpose(0, 2, 1),
        np.broadcast_to(aidx[:, :, None], gv.shape).transpose(0, 2, 1),
        gv.transpose(0, 2, 1),
        (dm.n_t, dm.n_e),
    )

    # exact simplex P1 mass rule: (I + ones) * vol / ((d+1)(d+2))
    mass_loc = (np.ones((nloc, nloc)) + np.eye(nloc)) / ((d + 1) * (d + 2))
    loc = mass_loc[None, :, :] * vols[:, None, None]
    X = _accumulate(rows_ii, cols_ii, loc, (dm.n_e0, dm.n_e0))
    Y = _accumulate(rows_ii, cols_ia, loc, (dm.n_e0, dm.n_e))

    lump = np.broadcast_to(vols[:, None] / nloc, iidx.shape).ravel()
    flat_i = iidx.ravel()
    sel = flat_i >= 0
    alpha = np.zeros(dm.n_e0)
    np.add.at(alpha, flat_i[sel], lump[sel])
    beta = np.zeros(dm.n_e)
    np.add.at(beta, aidx.ravel(), lump)

    return Table1(
        K_P=K_P, F_P=F_P, M_P=M_P, G=G, X=X, Y=Y,
        alpha=alpha, beta=beta, dofmap=dm, volumes=vols, material=material,
    )


@dataclass(frozen=True)
class BlockPencil:
    """The undeflated generalized eigenvalue pencil (K, M).

    Block order: interior P1, P0^d, all-vertex P1, then the two zero-mean
    multipliers.  K carries the constraint rows; M couples only the P1
    blocks.
    """

    K: sp.csr_matrix
    M: sp.csr_matrix
    table: Table1

    @property
    def n(self) -> int:
        return self.K.shape[0]


def assemble_full_gep(mesh: Mesh, material: MaterialModel) -> BlockPencil:
    """Assemble the full sparse symmetric pencil with multiplier rows."""
    t = assemble_table1(mesh, material)
    return block_pencil(t)


def block_pencil(t: Table1) -> BlockPencil:
    """Arrange Table-1 blocks into the full (K, M) pencil."""
    dm = t.dofmap
    a = sp.csr_matrix(t.alpha.reshape(-1, 1))
    b = sp.csr_matrix(t.beta.reshape(-1, 1))
    z1 = sp.csr_matrix((1, 1))
    K = sp.bmat(
        [
            [t.K_P, t.F_P, None, a, None],
            [t.F_P.T, t.M_P, -t.G, None, None],
            [None, -t.G.T, None, None, b],
            [a.T, None, None, z1, None],
            [None, None, b.T, None, z1],
        ],
        format="csr",
    )
    zt = sp.csr_matrix((dm.n_t, dm.n_t))
    ze = sp.csr_matrix((dm.n_e, dm.n_e))
    M = sp.bmat(
        [
            [t.X, None, t.Y, None, None],
            [None, zt, None, None, None],
            [t.Y.T, None, ze, None, None],
            [None, None, None, z1, None],
            [None, None, None, None, z1],
        ],
        format="csr",
    )
    return BlockPencil(K=K, M=M, table=t)


def assemble_reduced_direct(
    mesh: Mesh, material: MaterialModel
) -> tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]:
    """Directly assemble the Schur-reduced blocks (K_hat, F_hat, G_hat).

    Each is a weighted P1 stiffness matrix: interior x interior,
    interior x all, and all x all respectively, with the closed-form
    weights of :func:`teig.material.direct_weights`.  No matrix products
    are involved.
    """
    from .material import direct_weights

    if material.dim != mesh.dim:
        raise AssemblyError(
            f"material is {material.dim}D but the mesh is {mesh.dim}D"
        )
    dm = build_dofmap(mesh)
    if dm.n_e0 == 0:
        raise AssemblyError("mesh has no interior vertices")
    w_k, w_f, w_g = direct_weights(material)
    d = mesh.dim
    cells = mesh.cells
    vols, grads = _geometry(mesh.vertices, cells, d)
    iidx = dm.interior_index[cells]
    nloc = d + 1
    shape3 = (len(cells), nloc, nloc)

    def stiff(weight, ridx, cidx, shape, symmetrize):
        loc = np.einsum("nid,de,nje->nij", grads, weight, grads) * vols[:, None, None]
        if symmetrize:
            loc = 0.5 * (loc + loc.transpose(0, 2, 1))
        return _accumulate(
            np.broadcast_to(ridx[:, :, None], shape3),
            np.broadcast_to(cidx[:, None, :], shape3),
            loc,
            shape,
        )

    K_hat = stiff(w_k, iidx, iidx, (dm.n_e0, dm.n_e0), True)
    F_hat = stiff(w_f, iidx, cells, (dm.n_e0, dm.n_e), False)
    G_hat = stiff(w_g, cells, cells, (dm.n_e, dm.n_e), True)
    return K_hat, F_hat, G_hat


@dataclass(frozen=True)
class DirichletPair:
    """P1 stiffness/mass pair for the Dirichlet Laplacian.

    ``stiff_all`` spans all vertices (row sums vanish); the eigenvalue
    estimate uses the interior restriction against the interior mass.
    """

    stiff_all: sp.csr_matrix
    stiff_int: sp.csr_matrix
    mass_int: sp.csr_matrix
    dofmap: DofMap


def assemble_dirichlet_laplacian(mesh: Mesh) -> DirichletPair:
    """Assemble the unweighted P1 Laplacian pair for the kappa_1 bound."""
    dm = build_dofmap(mesh)
    d = mesh.dim
    cells = mesh.cells
    vols, grads = _geometry(mesh.vertices, cells, d)
    nloc = d + 1
    loc = np.einsum("nid,njd->nij", grads, grads) * vols[:, None, None]
    loc = 0.5 * (loc + loc.transpose(0, 2, 1))
    shape3 = (len(cells), nloc, nloc)
    iidx = dm.interior_index[cells]
    stiff_all = _accumulate(
        np.broadcast_to(cells[:, :, None], shape3),
        np.broadcast_to(cells[:, None, :], shape3),
        loc,
        (dm.n_e, dm.n_e),
    )
    stiff_int = _accumulate(
        np.broadcast_to(iidx[:, :, None], shape3),
        np.broadcast_to(iidx[:, None, :], shape3),
        loc,
        (dm.n_e0, dm.n_e0),
    )
    mass_loc = (np.ones((nloc, nloc)) + np.eye(nloc)) / ((d + 1) * (d + 2))
    mloc = mass_loc[None, :, :] * vols[:, None, None]
    mass_int = _accumulate(
        np.broadcast_to(iidx[:, :, None], shape3),
        np.broadcast_to(iidx[:, None, :], shape3),
        mloc,
        (dm.n_e0, dm.n_e0),
    )
    return DirichletPair(stiff_all=stiff_all, stiff_int=stiff_int, mass_int=mass_int, dofmap=dm)


def export_matrix_market(matrix: sp.spmatrix, path, symmetric: bool = False) -> None:
    """Write a sparse matrix in MatrixMarket coordinate format."""
    scipy.io.mmwrite(
        str(path),
        sp.coo_matrix(matrix),
        symmetry="symmetric" if symmetric else "general",
    )
