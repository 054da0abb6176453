import numpy as np
import pytest
import scipy.sparse as sp

from teig.assembly import (
    AssemblyError,
    assemble_dirichlet_laplacian,
    assemble_full_gep,
    assemble_reduced_direct,
    assemble_table1,
    build_dofmap,
    element_geometry,
    export_matrix_market,
)
from teig.material import make_material, material_preset
from teig.mesh import DomainSpec, Mesh, generate, refine

from conftest import random_spd


@pytest.fixture(scope="module")
def table_h4(square_h4, mat_a1):
    return assemble_table1(square_h4, mat_a1)


def reference_triangle_mesh():
    # reference triangle completed to a square so an interior vertex exists
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    cells = np.array([[0, 1, 2], [1, 3, 2]])
    return Mesh.from_arrays(2, verts, cells)


def test_element_geometry_reference_triangle():
    mesh = reference_triangle_mesh()
    vol, grads = element_geometry(mesh, 0)
    assert vol == pytest.approx(0.5)
    assert np.allclose(grads, [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def test_element_gradients_sum_to_zero():
    for spec, level in [("disk", -1), ("cube", -2)]:
        mesh = generate(DomainSpec(spec), level)
        for cell in range(0, mesh.n_cells, max(1, mesh.n_cells // 7)):
            _, grads = element_geometry(mesh, cell)
            assert np.abs(grads.sum(axis=0)).max() <= 1e-13


def test_element_geometry_reference_tet():
    verts = np.array(
        [[0.0, 0, 0], [1.0, 0, 0], [0.0, 1, 0], [0.0, 0, 1], [1.0, 1, 1]]
    )
    cells = np.array([[0, 1, 2, 3], [1, 2, 3, 4]])
    mesh = Mesh.from_arrays(3, verts, cells)
    vol, grads = element_geometry(mesh, 0)
    assert vol == pytest.approx(1.0 / 6.0)
    assert np.abs(grads.sum(axis=0)).max() <= 1e-13


def test_element_stiffness_weight_third():
    # vol * grads @ W @ grads.T on the reference triangle, W = I/3
    mesh = reference_triangle_mesh()
    vol, grads = element_geometry(mesh, 0)
    loc = vol * grads @ (np.eye(2) / 3.0) @ grads.T
    expected = (1.0 / 3.0) * 0.5 * np.array(
        [[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]]
    )
    assert np.allclose(loc, expected, atol=1e-15)


def test_element_mass_exact_rule():
    # exact simplex rule on the reference triangle: (1/24) * (ones + eye)
    mesh = reference_triangle_mesh()
    vol, _ = element_geometry(mesh, 0)
    loc = vol / 12.0 * (np.ones((3, 3)) + np.eye(3))
    expected = np.array([[2.0, 1, 1], [1, 2.0, 1], [1, 1, 2.0]]) / 24.0
    assert np.allclose(loc, expected, atol=1e-16)


def test_beta_sums_to_domain_volume(square_h4, mat_a1):
    t = assemble_table1(square_h4, mat_a1)
    assert t.beta.sum() == pytest.approx(1.0, abs=1e-14)
    disk = generate(DomainSpec("disk"), -1)
    td = assemble_table1(disk, mat_a1)
    assert td.beta.sum() == pytest.approx(disk.total_volume(), abs=1e-14)


def test_alpha_is_interior_restriction_of_beta(table_h4, square_h4):
    dm = table_h4.dofmap
    assert np.allclose(table_h4.alpha, table_h4.beta[dm.interior_vertices], atol=1e-15)


def test_mass_block_kronecker_structure(square_h4, mat_a1, table_h4):
    vols = table_h4.volumes
    expected = sp.kron(sp.csr_matrix(mat_a1.W_mass), sp.diags(vols)).tocsr()
    assert (table_h4.M_P != expected).nnz == 0
    # for A1 each diagonal block is (4/3) * diag(volumes)
    n = square_h4.n_cells
    block = table_h4.M_P[:n, :n].toarray()
    assert np.allclose(block, 4.0 / 3.0 * np.diag(vols), atol=1e-15)
    assert abs(table_h4.M_P[:n, n:]).max() == 0.0


def test_divergence_block_annihilates_constants(table_h4):
    ones = np.ones(table_h4.dofmap.n_e)
    assert np.abs(table_h4.G @ ones).max() <= 1e-13


def test_assembled_blocks_symmetric(table_h4):
    for S in (table_h4.K_P, table_h4.M_P, table_h4.X):
        assert abs(S - S.T).max() <= 1e-13 * abs(S).max()


def test_assembly_deterministic(square_h4, mat_a1):
    a = assemble_table1(square_h4, mat_a1)
    b = assemble_table1(square_h4, mat_a1)
    for x, y in [(a.K_P, b.K_P), (a.F_P, b.F_P), (a.G, b.G), (a.X, b.X), (a.Y, b.Y)]:
        assert np.array_equal(x.indptr, y.indptr)
        assert np.array_equal(x.indices, y.indices)
        assert np.array_equal(x.data, y.data)
    assert np.array_equal(a.alpha, b.alpha)


def test_full_pencil_structure(square_h4, mat_a1):
    bp = assemble_full_gep(square_h4, mat_a1)
    dm = bp.table.dofmap
    assert bp.n == dm.n_e0 + dm.n_t + dm.n_e + 2
    assert abs(bp.K - bp.K.T).max() <= 1e-13 * abs(bp.K).max()
    assert abs(bp.M - bp.M.T).max() == 0.0
    # M vanishes outside the P1 blocks: structural rank deficiency >= n_t + 2
    zero_rows = np.diff(bp.M.tocsr().indptr) == 0
    assert zero_rows.sum() >= dm.n_t + 2


def test_multiplier_column_is_alpha(square_h4, mat_a1):
    bp = assemble_full_gep(square_h4, mat_a1)
    dm = bp.table.dofmap
    sigma_col = dm.n_e0 + dm.n_t + dm.n_e
    e = np.zeros(bp.n)
    e[sigma_col] = 1.0
    col = bp.K @ e
    assert np.allclose(col[: dm.n_e0], bp.table.alpha, atol=1e-15)
    assert np.abs(col[dm.n_e0 :]).max() == 0.0


def test_reduced_direct_regime_one_is_scaled_laplacian(square_h4, mat_a1):
    K_hat, F_hat, G_hat = assemble_reduced_direct(square_h4, mat_a1)
    pair = assemble_dirichlet_laplacian(square_h4)
    assert abs(K_hat - 0.25 * pair.stiff_int).max() <= 1e-14
    # interior columns of F_hat coincide with K_hat
    dm = build_dofmap(square_h4)
    F_int = F_hat[:, dm.interior_vertices]
    assert abs(F_int - K_hat).max() <= 1e-14


def test_reduced_ghat_negative_semidefinite(square_h4, mat_a1):
    _, _, G_hat = assemble_reduced_direct(square_h4, mat_a1)
    eigs = np.linalg.eigvalsh(G_hat.toarray())
    assert eigs.max() <= 1e-12


def test_reduced_direct_matches_products_both_regimes(square_h8):
    for seed in range(6):
        lo, hi = ((0.05, 0.9) if seed % 2 else (1.2, 15.0))
        mat = make_material(random_spd(2, lo, hi, seed + 11))
        t = assemble_table1(square_h8, mat)
        K_hat, F_hat, G_hat = assemble_reduced_direct(square_h8, mat)
        Minv = sp.kron(
            sp.csr_matrix(np.linalg.inv(mat.W_mass)), sp.diags(1.0 / t.volumes)
        )
        ref_K = (t.K_P - t.F_P @ Minv @ t.F_P.T).toarray()
        ref_F = (t.F_P @ Minv @ t.G).toarray()
        ref_G = (-t.G.T @ Minv @ t.G).toarray()
        assert np.abs(K_hat.toarray() - ref_K).max() <= 1e-12 * np.abs(ref_K).max()
        assert np.abs(F_hat.toarray() - ref_F).max() <= 1e-12 * np.abs(ref_F).max()
        assert np.abs(G_hat.toarray() - ref_G).max() <= 1e-12 * np.abs(ref_G).max()


def test_dirichlet_row_sums_vanish(square_h4):
    pair = assemble_dirichlet_laplacian(square_h4)
    row_sums = np.asarray(pair.stiff_all.sum(axis=1)).ravel()
    assert np.abs(row_sums).max() <= 1e-13


def test_dirichlet_disk_kappa1_bessel():
    # first Dirichlet eigenvalue of the radius-1/2 disk is (j01/0.5)^2
    from teig.eigensolver import first_dirichlet_eigenvalue

    mesh = generate(DomainSpec("disk"), 3)
    j01 = 2.404825557695773
    exact = (j01 / 0.5) ** 2
    kappa = first_dirichlet_eigenvalue(mesh)
    assert kappa == pytest.approx(exact, rel=2e-2)
    assert kappa > exact * (1.0 - 1e-6)  # polygonal + P1 estimate stays above


def test_empty_interior_rejected(mat_a1):
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    cells = np.array([[0, 1, 2], [1, 3, 2]])
    mesh = Mesh.from_arrays(2, verts, cells)
    with pytest.raises(AssemblyError, match="interior"):
        assemble_table1(mesh, mat_a1)


def test_dimension_mismatch_rejected(square_h4):
    with pytest.raises(AssemblyError, match="3D"):
        assemble_table1(square_h4, material_preset("A6"))


def test_matrix_market_export(tmp_path, table_h4):
    path = tmp_path / "kp.mtx"
    export_matrix_market(table_h4.K_P, path, symmetric=True)
    text = path.read_text()
    assert "symmetric" in text.splitlines()[0]
    import scipy.io

    back = scipy.io.mmread(path).tocsr()
    assert abs(back - table_h4.K_P).max() <= 1e-15
