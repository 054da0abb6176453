"""Acceptance suite: one test per exit criterion, each printing PASS/FAIL.

Heavy pipelines (refinement studies on the square, L-shape, disk, cube)
run once in session fixtures and are shared across criteria.
"""

import math
import time

import numpy as np
import pytest

from teig.assembly import assemble_full_gep, assemble_table1
from teig.deflation import reduce_direct, schur_reduce, verify_spectrum_relation, congruence_error
from teig.eigensolver import first_dirichlet_eigenvalue
from teig.eigensolver.ordering import eqslantless, polar_angle
from teig.harness import run_convergence, run_preset
from teig.material import make_material, material_preset
from teig.mesh import DomainSpec, generate

from conftest import perturbed_mesh, random_spd


def report(criterion: int, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {criterion:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


@pytest.fixture(scope="session")
def square_run():
    return run_convergence(
        DomainSpec("square"), material_preset("A1"), range(2, 6), count=1,
        material_name="A1",
    )


@pytest.fixture(scope="session")
def lshape_run():
    return run_convergence(
        DomainSpec("lshape"), material_preset("A1"), range(2, 6), count=1,
        material_name="A1",
    )


@pytest.fixture(scope="session")
def disk_run():
    return run_convergence(
        DomainSpec("disk"), material_preset("A1"), range(1, 5), count=6,
        material_name="A1",
    )


@pytest.fixture(scope="session")
def cube_run():
    return run_convergence(
        DomainSpec("cube"), material_preset("A6"), range(0, 2), count=6,
        material_name="A6",
    )


def test_criterion_01_deflation_spectrum(square_h4, mat_a1):
    t0 = time.perf_counter()
    bp = assemble_full_gep(square_h4, mat_a1)
    rp = reduce_direct(square_h4, mat_a1, table=bp.table)
    rep = verify_spectrum_relation(bp, rp)
    elapsed = time.perf_counter() - t0
    ok = (
        rep.infinite_removed == rep.n_t
        and rep.n_finite_full == rep.n_finite_reduced
        and rep.max_rel_mismatch <= 1e-8
        and elapsed < 10.0
    )
    report(
        1,
        ok,
        f"deflation removes exactly n_t={rep.n_t} infinite eigenvalues, "
        f"finite spectra agree to {rep.max_rel_mismatch:.2e} "
        f"({elapsed:.2f} s)",
    )


def test_criterion_02_direct_assembly_theorem(square_h4):
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(10):
        mesh = perturbed_mesh(square_h4, seed)
        lo, hi = ((0.05, 0.9) if seed % 2 == 0 else (1.1, 15.0))
        mat = make_material(random_spd(2, lo, hi, seed + 271))
        bp = assemble_full_gep(mesh, mat)
        rp_direct = reduce_direct(mesh, mat, table=bp.table)
        rp_schur = schur_reduce(bp)
        dm = bp.table.dofmap
        n0, ne = dm.n_e0, dm.n_e
        for sl_r, sl_c in (
            (slice(0, n0), slice(0, n0)),  # stiffness block
            (slice(0, n0), slice(n0, n0 + ne)),  # coupling block
            (slice(n0, n0 + ne), slice(n0, n0 + ne)),  # all-vertex block
        ):
            d = rp_direct.K_hat_full[sl_r, sl_c]
            s = rp_schur.K_hat_full[sl_r, sl_c]
            rel = abs(d - s).max() / abs(d).max()
            worst = max(worst, rel)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 5.0
    report(
        2,
        ok,
        f"direct assembly equals Schur elimination on 10 random meshes in "
        f"both regimes (worst rel error {worst:.2e}, {elapsed:.2f} s)",
    )


def test_criterion_03_congruence_identity(square_h4, mat_a1):
    bp = assemble_full_gep(square_h4, mat_a1)
    rp = reduce_direct(square_h4, mat_a1, table=bp.table)
    assert bp.n <= 200
    err_k, err_m = congruence_error(bp, rp)
    scale = abs(bp.K).max()
    ok = err_k <= 1e-12 * scale and err_m <= 1e-12 * scale
    report(
        3,
        ok,
        f"explicit congruence reproduces the reduced pencil entrywise "
        f"(errors {err_k:.2e}, {err_m:.2e} on a {bp.n}-dof pencil)",
    )


def test_criterion_04_square_value(square_run):
    lams = {res.level: res.lambdas()[0] for res in square_run.levels}
    lam_ext = lams[5] + (lams[5] - lams[4]) / 3.0
    k_ext = math.sqrt(lam_ext)
    diff = abs(k_ext - 5.2987)
    ok = diff <= 5e-3
    report(
        4,
        ok,
        f"square k1 extrapolated from levels 3-5 = {k_ext:.6f}, "
        f"|diff| to 5.2987 = {diff:.2e} (tol 5e-3)",
    )


def test_criterion_05_disk_values(disk_run):
    paper_row3 = (5.8117, 6.8108, 6.8109, 7.5850, 7.5851, 7.6239)
    by_level = {res.level: res for res in disk_run.levels}
    k1_finest = by_level[4].ks()[0]
    diff1 = abs(k1_finest - 5.8053)
    row = by_level[3].ks()
    row_diffs = [abs(a - b) for a, b in zip(row, paper_row3)]
    ok = (
        diff1 <= 1e-2
        and disk_run.monotone[0]
        and len(row) == 6
        and max(row_diffs) <= 5e-2
    )
    report(
        5,
        ok,
        f"disk k1 at finest level {k1_finest:.4f} (|diff| {diff1:.2e} <= 1e-2), "
        f"monotone={disk_run.monotone[0]}, level-3 row worst diff "
        f"{max(row_diffs):.3f} (tol 5e-2)",
    )


def test_criterion_06_convergence_order(square_run, lshape_run):
    sq = square_run.rate_values(0)
    ls = lshape_run.rate_values(0)
    ok = (
        len(sq) == 2
        and all(1.7 <= r <= 2.3 for r in sq)
        and len(ls) == 2
        and all(1.5 <= r <= 2.3 for r in ls)
    )
    report(
        6,
        ok,
        f"lambda_1 rates: square {['%.3f' % r for r in sq]} in [1.7, 2.3], "
        f"lshape {['%.3f' % r for r in ls]} in [1.5, 2.3]",
    )


def test_criterion_07_lower_bound_all_presets():
    coarsest = {"ex1": 1, "ex2": 1, "ex3": 1, "ex4": 1,
                "ex5": 0, "ex6": 0, "ex7": 0, "ex8": 0}
    worst = np.inf
    checked = 0
    for name, level in coarsest.items():
        for rep_ in run_preset(name, max_level=level, count=6):
            mat = material_preset(rep_.material)
            bound_factor = mat.inv_norm_bound if mat.regime == "I" else 1.0
            for res in rep_.levels:
                floor = res.kappa1 * bound_factor * (1.0 - 0.02)
                for lam in res.lambdas():
                    worst = min(worst, lam / floor)
                    checked += 1
    ok = checked >= 6 * 23 and worst >= 1.0
    report(
        7,
        ok,
        f"all {checked} computed real eigenvalues across every preset sit "
        f"above the Dirichlet bound (worst margin ratio {worst:.3f})",
    )


def test_criterion_08_dirichlet_sanity():
    # Known red: the uniform 6-tet-per-voxel split carries an eigenvalue
    # error constant of about 4.2*h^2 (6.5% at h=1/8, cross-checked with
    # dense LAPACK and ARPACK), so the 2% target is out of reach for this
    # mesh family at that level.  See README "Known limitation".
    sq = generate(DomainSpec("square"), 3)  # h = 1/64
    k_sq = first_dirichlet_eigenvalue(sq)
    err_sq = abs(k_sq - 2 * np.pi**2) / (2 * np.pi**2)
    cube = generate(DomainSpec("cube"), 0)  # h = 1/8
    k_cu = first_dirichlet_eigenvalue(cube)
    err_cu = abs(k_cu - 3 * np.pi**2) / (3 * np.pi**2)
    ok = err_sq <= 1e-2 and err_cu <= 2e-2
    report(
        8,
        ok,
        f"kappa1(square, h=1/64) = {k_sq:.4f}, rel err {err_sq:.2e} (target 1e-2); "
        f"kappa1(cube, h=1/8) = {k_cu:.4f}, rel err {err_cu:.2e} (target 2e-2)",
    )


def test_criterion_09_dof_ratio(square_run, cube_run):
    ratios_2d = [res.dof_full / res.dof_reduced for res in square_run.levels]
    cube_l1 = next(res for res in cube_run.levels if res.level == 1)
    ratio_3d = cube_l1.dof_full / cube_l1.dof_reduced
    ok = all(2.5 <= r <= 3.5 for r in ratios_2d) and 8.0 <= ratio_3d <= 12.0
    report(
        9,
        ok,
        f"dof ratios: 2D {['%.2f' % r for r in ratios_2d]} in [2.5, 3.5], "
        f"level-1 cube {ratio_3d:.2f} in [8, 12]",
    )


def test_criterion_10_3d_smoke(cube_run):
    by_level = {res.level: res for res in cube_run.levels}
    l0, l1 = by_level[0], by_level[1]
    residual_ok = all(p.residual <= 1e-10 for p in l0.pairs + l1.pairs)
    enough = len(l0.pairs) >= 6 and len(l1.pairs) >= 6
    monotone = all(
        b.k <= a.k + 1e-8 for a, b in zip(l0.pairs, l1.pairs)
    )
    ok = residual_ok and enough and monotone
    report(
        10,
        ok,
        f"cube/A6: {len(l1.pairs)} real eigenvalues converged at both levels "
        f"(max residual {max(p.residual for p in l0.pairs + l1.pairs):.1e}), "
        f"k decreasing over one refinement: {monotone}",
    )


def test_criterion_11_ordering_property():
    rng = np.random.default_rng(1234)
    n = 100_000
    def sample(k):
        kind = rng.integers(0, 5, size=k)
        vals = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        vals[kind == 0] = 0.0
        same_mod = kind == 1
        vals[same_mod] = np.exp(2j * np.pi * rng.random(same_mod.sum()))
        vals[kind == 2] = vals[kind == 2].real
        return vals

    a, b, c = sample(n), sample(n), sample(n)

    def clause(x, y):
        rx, ry = abs(x), abs(y)
        if rx == 0.0 and ry == 0.0:
            return True
        if rx < ry:
            return True
        return rx == ry and polar_angle(x) >= polar_angle(y)

    bad_clause = 0
    bad_total = 0
    bad_trans = 0
    for i in range(n):
        ab = eqslantless(a[i], b[i])
        if ab != clause(a[i], b[i]):
            bad_clause += 1
        if not (ab or eqslantless(b[i], a[i])):
            bad_total += 1
        if ab and eqslantless(b[i], c[i]) and not eqslantless(a[i], c[i]):
            bad_trans += 1
    ok = bad_clause == 0 and bad_total == 0 and bad_trans == 0
    report(
        11,
        ok,
        f"eigenvalue order over {n} random triples: clause mismatches "
        f"{bad_clause}, totality failures {bad_total}, transitivity "
        f"failures {bad_trans}",
    )
