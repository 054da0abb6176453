import numpy as np
import pytest
import scipy.sparse as sp

from teig.assembly import assemble_full_gep, assemble_table1
from teig.deflation import (
    DeflationError,
    congruence_error,
    congruence_matrix,
    reduce_direct,
    schur_reduce,
    verify_spectrum_relation,
)
from teig.material import make_material
from teig.mesh import DomainSpec, generate

from conftest import perturbed_mesh, random_spd


@pytest.fixture(scope="module")
def pencil_h4(square_h4, mat_a1):
    bp = assemble_full_gep(square_h4, mat_a1)
    rp = reduce_direct(square_h4, mat_a1, table=bp.table)
    return bp, rp


def test_direct_equals_schur_h4(pencil_h4):
    bp, rp = pencil_h4
    rp_s = schur_reduce(bp)
    diff = abs(rp.K_hat_full - rp_s.K_hat_full).max()
    assert diff <= 1e-12 * abs(rp.K_hat_full).max()
    assert abs(rp.M_hat - rp_s.M_hat).max() == 0.0


def test_size_drop_is_exactly_nt(pencil_h4):
    bp, rp = pencil_h4
    assert rp.n == bp.n - bp.table.dofmap.n_t
    assert rp.n_t_removed == bp.table.dofmap.n_t


def test_dof_ratio_2d(mat_a1):
    for level in (-1, 0, 1):
        mesh = generate(DomainSpec("square"), level)
        t = assemble_table1(mesh, mat_a1)
        ratio = t.dofmap.n_full / t.dofmap.n_reduced
        assert 2.5 <= ratio <= 3.5


def test_congruence_identities(pencil_h4):
    bp, rp = pencil_h4
    scale = abs(bp.K).max()
    err_k, err_m = congruence_error(bp, rp)
    assert err_k <= 1e-12 * scale
    assert err_m <= 1e-12 * scale


def test_congruence_matrix_invertible(pencil_h4):
    bp, _ = pencil_h4
    W = congruence_matrix(bp).toarray()
    sign, logdet = np.linalg.slogdet(W)
    assert sign != 0.0 and np.isfinite(logdet)


def test_spectrum_relation_square_h4(pencil_h4, square_h4):
    bp, rp = pencil_h4
    rep = verify_spectrum_relation(bp, rp)
    assert rep.infinite_removed == rep.n_t == 2 * square_h4.n_cells
    assert rep.n_finite_full == rep.n_finite_reduced
    assert rep.max_rel_mismatch <= 1e-8
    assert rep.counts_consistent


def test_spectrum_relation_regime_two_toy(mat_2d_regime2):
    mesh = generate(DomainSpec("square"), -1)
    bp = assemble_full_gep(mesh, mat_2d_regime2)
    rp = reduce_direct(mesh, mat_2d_regime2, table=bp.table)
    rep = verify_spectrum_relation(bp, rp)
    assert rep.infinite_removed == rep.n_t
    assert rep.max_rel_mismatch <= 1e-8
    assert rep.counts_consistent


def test_direct_equals_schur_random_meshes(square_h4):
    for seed in range(4):
        mesh = perturbed_mesh(square_h4, seed)
        lo, hi = ((0.05, 0.9) if seed % 2 else (1.2, 12.0))
        mat = make_material(random_spd(2, lo, hi, seed + 41))
        bp = assemble_full_gep(mesh, mat)
        rp_d = reduce_direct(mesh, mat, table=bp.table)
        rp_s = schur_reduce(bp)
        diff = abs(rp_d.K_hat_full - rp_s.K_hat_full).max()
        assert diff <= 1e-12 * abs(rp_d.K_hat_full).max()


def test_sparsity_not_deteriorated(square_h16, mat_a1):
    bp = assemble_full_gep(square_h16, mat_a1)
    rp = reduce_direct(square_h16, mat_a1, table=bp.table)
    per_row_full = bp.table.K_P.nnz / bp.table.K_P.shape[0]
    per_row_reduced = rp.K_hat_full.nnz / rp.K_hat_full.shape[0]
    assert per_row_reduced <= 4.0 * per_row_full


def test_oracle_budget_enforced(pencil_h4):
    bp, rp = pencil_h4
    with pytest.raises(DeflationError, match="budget"):
        verify_spectrum_relation(bp, rp, n_max=50)


def test_reduced_blocks_layout(pencil_h4):
    bp, rp = pencil_h4
    dm = bp.table.dofmap
    K = rp.K_hat_full
    # constraint column of the first multiplier is alpha
    col = K[: dm.n_e0, dm.n_e0 + dm.n_e].toarray().ravel()
    assert np.allclose(col, bp.table.alpha, atol=1e-15)
    col2 = K[dm.n_e0 : dm.n_e0 + dm.n_e, dm.n_e0 + dm.n_e + 1].toarray().ravel()
    assert np.allclose(col2, bp.table.beta, atol=1e-15)
    # reduced mass keeps the structural zero corner
    M = rp.M_hat
    assert abs(M[dm.n_e0 :, dm.n_e0 :]).max() == 0.0
