"""Deflation of the block pencil's structural infinite eigenvalues.

The piecewise-constant block carries an n_t-fold infinite eigenvalue.  A
congruence built from the closed-form inverse of the Kronecker mass block
splits the pencil into the reduced pair plus that mass block, shrinking
the problem by n_t rows without hurting sparsity.  The reduced blocks are
assembled directly in production; the explicit Schur products and the
congruence matrix exist as cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .assembly import (
    BlockPencil,
    Table1,
    assemble_reduced_direct,
    assemble_table1,
)
from .material import MaterialModel
from .mesh import Mesh

_W_MASS_COND_LIMIT = 1e14


class DeflationError(ValueError):
    """Reduction preconditions violated."""


@dataclass(frozen=True)
class ReducedPencil:
    """The deflated pair: blocks [interior P1, all P1, two multipliers].

    ``K_hat_full`` stacks the reduced stiffness blocks with the zero-mean
    constraint rows; ``M_hat`` couples only the P1 blocks and keeps the
    structural zero lower-right corner.
    """

    K_hat_full: sp.csr_matrix
    M_hat: sp.csr_matrix
    n_e0: int
    n_e: int
    n_t_removed: int

    @property
    def n(self) -> int:
        return self.K_hat_full.shape[0]


def _assemble_reduced(K_hat, F_hat, G_hat, t: Table1) -> ReducedPencil:
    dm = t.dofmap
    a = sp.csr_matrix(t.alpha.reshape(-1, 1))
    b = sp.csr_matrix(t.beta.reshape(-1, 1))
    z1 = sp.csr_matrix((1, 1))
    K = sp.bmat(
        [
            [K_hat, F_hat, a, None],
            [F_hat.T, G_hat, None, b],
            [a.T, None, z1, None],
            [None, b.T, None, z1],
        ],
        format="csr",
    )
    ze = sp.csr_matrix((dm.n_e, dm.n_e))
    M = sp.bmat(
        [
            [t.X, t.Y, None, None],
            [t.Y.T, ze, None, None],
            [None, None, z1, None],
            [None, None, None, z1],
        ],
        format="csr",
    )
    return ReducedPencil(
        K_hat_full=K, M_hat=M, n_e0=dm.n_e0, n_e=dm.n_e, n_t_removed=dm.n_t
    )


def reduce_direct(mesh: Mesh, material: MaterialModel, table: Table1 | None = None) -> ReducedPencil:
    """Production path: assemble the reduced pencil without matrix products."""
    if table is None:
        table = assemble_table1(mesh, material)
    K_hat, F_hat, G_hat = assemble_reduced_direct(mesh, material)
    return _assemble_reduced(K_hat, F_hat, G_hat, table)


def _mass_inverse(t: Table1) -> sp.csr_matrix:
    w = t.material.W_mass
    if np.linalg.cond(w) > _W_MASS_COND_LIMIT:
        raise DeflationError("weighted mass matrix is numerically singular")
    return sp.kron(
        sp.csr_matrix(np.linalg.inv(w)), sp.diags(1.0 / t.volumes), format="csr"
    )


def schur_reduce(bp: BlockPencil, material: MaterialModel | None = None) -> ReducedPencil:
    """Cross-check path: eliminate the constant block by explicit products.

    Uses the closed-form inverse ``inv(W_mass) (x) diag(1/volumes)`` of the
    Kronecker mass block.
    """
    t = bp.table
    Minv = _mass_inverse(t)
    K_hat = t.K_P - t.F_P @ Minv @ t.F_P.T
    F_hat = t.F_P @ Minv @ t.G
    G_hat = -t.G.T @ Minv @ t.G
    K_hat = 0.5 * (K_hat + K_hat.T)
    G_hat = 0.5 * (G_hat + G_hat.T)
    return _assemble_reduced(K_hat.tocsr(), F_hat.tocsr(), G_hat.tocsr(), t)


def congruence_matrix(bp: BlockPencil) -> sp.csr_matrix:
    """The explicit invertible transform realizing the deflation.

    Conjugating the full pencil with it yields ``K_hat_full (+) M_P`` and
    ``M_hat (+) 0`` exactly; intended for toy-size verification.
    """
    t = bp.table
    dm = t.dofmap
    Minv = _mass_inverse(t)
    I0 = sp.identity(dm.n_e0, format="csr")
    Ie = sp.identity(dm.n_e, format="csr")
    It = sp.identity(dm.n_t, format="csr")
    i1 = sp.identity(1, format="csr")
    return sp.bmat(
        [
            [I0, -t.F_P @ Minv, None, None, None],
            [None, t.G.T @ Minv, Ie, None, None],
            [None, None, None, i1, None],
            [None, None, None, None, i1],
            [None, It, None, None, None],
        ],
        format="csr",
    )


def congruence_error(bp: BlockPencil, rp: ReducedPencil) -> tuple[float, float]:
    """Max-norm errors of the two congruence identities (toy sizes only)."""
    W = congruence_matrix(bp)
    t = bp.table
    lhs_k = W @ bp.K @ W.T
    rhs_k = sp.block_diag([rp.K_hat_full, t.M_P], format="csr")
    lhs_m = W @ bp.M @ W.T
    rhs_m = sp.block_diag(
        [rp.M_hat, sp.csr_matrix((t.dofmap.n_t, t.dofmap.n_t))], format="csr"
    )
    err_k = np.abs((lhs_k - rhs_k).toarray()).max()
    err_m = np.abs((lhs_m - rhs_m).toarray()).max()
    return float(err_k), float(err_m)


@dataclass(frozen=True)
class SpectrumReport:
    """Comparison of full and reduced dense spectra."""

    n_t: int
    n_infinite_full: int
    n_infinite_reduced: int
    n_finite_full: int
    n_finite_reduced: int
    max_rel_mismatch: float
    matched: int

    @property
    def infinite_removed(self) -> int:
        return self.n_infinite_full - self.n_infinite_reduced

    @property
    def counts_consistent(self) -> bool:
        return (
            self.infinite_removed == self.n_t
            and self.n_finite_full == self.n_finite_reduced
        )


def verify_spectrum_relation(
    bp: BlockPencil, rp: ReducedPencil, n_max: int = 2000
) -> SpectrumReport:
    """Check that deflation removed exactly the n_t-fold infinite eigenvalue.

    Runs the dense full-spectrum oracle on both pencils, matches the finite
    eigenvalues by minimum-cost assignment, and reports the worst relative
    mismatch together with the infinite-eigenvalue counts.

    Raises
    ------
    DeflationError
        If the full pencil exceeds the dense-oracle budget ``n_max``.
    """
    from scipy.optimize import linear_sum_assignment

    from .eigensolver.dense import dense_oracle

    if bp.n > n_max:
        raise DeflationError(
            f"full pencil size {bp.n} exceeds the dense-oracle budget {n_max}"
        )
    full = dense_oracle(bp.K, bp.M, n_max=n_max)
    red = dense_oracle(rp.K_hat_full, rp.M_hat, n_max=n_max)

    fa, fb = full.finite, red.finite
    matched = min(len(fa), len(fb))
    max_rel = 0.0
    if matched:
        cost = np.abs(fa[:, None] - fb[None, :])
        rows, cols = linear_sum_assignment(cost)
        diffs = np.abs(fa[rows] - fb[cols])
        scale = np.maximum(np.abs(fa[rows]), 1e-30)
        max_rel = float((diffs / scale).max())
    return SpectrumReport(
        n_t=rp.n_t_removed,
        n_infinite_full=full.n_infinite,
        n_infinite_reduced=red.n_infinite,
        n_finite_full=len(fa),
        n_finite_reduced=len(fb),
        max_rel_mismatch=max_rel,
        matched=matched,
    )
