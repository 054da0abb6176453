"""Command line interface.

Exit codes: 0 on success, 2 on solver nonconvergence, 3 on invalid input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .assembly import AssemblyError
from .deflation import reduce_direct, verify_spectrum_relation
from .harness import (
    ConvergenceReport,
    HarnessError,
    emit_csv,
    emit_plotdata,
    run_convergence,
    run_preset,
    solve_on_mesh,
)
from .material import MaterialError, parse_material
from .mesh import DomainSpec, MeshError, generate, read_mesh, refine
from .eigensolver import first_dirichlet_eigenvalue

EXIT_OK = 0
EXIT_NONCONVERGED = 2
EXIT_INVALID = 3

logger = logging.getLogger("teig")


def _domain_or_mesh(text: str, level: int | None):
    """Resolve --domain: a named domain (generated at level) or a mesh file."""
    path = Path(text)
    if path.exists():
        return read_mesh(path), text
    spec = DomainSpec(text)
    if level is None:
        raise HarnessError("--level is required for named domains")
    return generate(spec, level), text


def _parse_levels(text: str) -> list[int]:
    if ".." in text:
        a, b = text.split("..", 1)
        lo, hi = int(a), int(b)
        if hi < lo:
            raise HarnessError(f"bad level range {text!r}")
        return list(range(lo, hi + 1))
    return [int(tok) for tok in text.split(",")]


def _print_report(report: ConvergenceReport) -> None:
    print(f"# domain={report.domain} material={report.material}")
    print(f"{'level':>5} {'h':>12} {'dof_full':>9} {'dof_red':>8}  k values")
    for res in report.levels:
        ks = " ".join(f"{p.k:.4f}" for p in res.pairs)
        print(
            f"{res.level:>5} {res.h:>12.6g} {res.dof_full:>9} {res.dof_reduced:>8}  {ks}"
        )
    for i, rates in sorted(report.rates.items()):
        if rates:
            vals = " ".join(f"{r:.2f}" for _, r in sorted(rates.items()))
            print(f"rate[{i}]: {vals}")
    for msg in report.failures:
        print(f"warning: {msg}", file=sys.stderr)


def cmd_solve(args) -> int:
    mesh, name = _domain_or_mesh(args.domain, args.level)
    material = parse_material(args.material, dim=mesh.dim)
    res = solve_on_mesh(
        mesh,
        material,
        count=args.count,
        sigma=args.shift,
        tol=args.tol,
        level=args.level or 0,
    )
    report = ConvergenceReport(domain=name, material=args.material, count=args.count)
    report.levels.append(res)
    _print_report(report)
    print(f"sigma={res.sigma:.6g} kappa1={res.kappa1:.6g} wall_ms={res.wall_ms:.1f}")
    if args.csv:
        emit_csv(report, args.csv)
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def cmd_converge(args) -> int:
    levels = _parse_levels(args.levels)
    path = Path(args.domain)
    if path.exists():
        initial = read_mesh(path)
        material = parse_material(args.material, dim=initial.dim)
        report = run_convergence(
            args.domain, material, levels, count=args.count, tol=args.tol,
            material_name=args.material, initial_mesh=initial,
        )
    else:
        spec = DomainSpec(args.domain)
        material = parse_material(args.material, dim=spec.dim)
        report = run_convergence(
            spec, material, levels, count=args.count, tol=args.tol,
            material_name=args.material,
        )
    _print_report(report)
    if args.csv:
        emit_csv(report, args.csv)
    if args.plotdata:
        emit_plotdata(report, args.plotdata)
    return EXIT_NONCONVERGED if report.failures else EXIT_OK


def cmd_verify_deflation(args) -> int:
    mesh, _ = _domain_or_mesh(args.domain, args.level)
    material = parse_material(args.material, dim=mesh.dim)
    from .assembly import assemble_full_gep

    bp = assemble_full_gep(mesh, material)
    rp = reduce_direct(mesh, material, table=bp.table)
    rep = verify_spectrum_relation(bp, rp, n_max=args.nmax)
    print(
        f"full size {bp.n} -> reduced {rp.n}; infinite removed "
        f"{rep.infinite_removed} (n_t={rep.n_t}); finite "
        f"{rep.n_finite_full}/{rep.n_finite_reduced}; "
        f"max relative mismatch {rep.max_rel_mismatch:.3e}"
    )
    ok = rep.counts_consistent and rep.max_rel_mismatch <= 1e-8
    print("deflation check:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_NONCONVERGED


def cmd_dirichlet(args) -> int:
    mesh, _ = _domain_or_mesh(args.domain, args.level)
    kappa1 = first_dirichlet_eigenvalue(mesh)
    print(f"kappa1 = {kappa1:.12g}")
    return EXIT_OK


def cmd_preset(args) -> int:
    reports = run_preset(args.name, max_level=args.max_level, count=args.count)
    failures = False
    for report in reports:
        _print_report(report)
        failures = failures or bool(report.failures)
        if args.csv_dir:
            out = Path(args.csv_dir)
            out.mkdir(parents=True, exist_ok=True)
            emit_csv(report, out / f"{args.name}_{report.material}.csv")
            emit_plotdata(report, out / f"{args.name}_{report.material}_plot.csv")
    return EXIT_NONCONVERGED if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teig",
        description="Smallest real Helmholtz transmission eigenvalues of anisotropic media",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, levels=False):
        p.add_argument("--domain", required=True, help="domain name or mesh file")
        p.add_argument(
            "--material", required=True, help="preset A1..A8 or flat row-major entries"
        )
        if levels:
            p.add_argument("--levels", required=True, help="range a..b or list a,b,c")
        else:
            p.add_argument("--level", type=int, default=None)
        p.add_argument("--count", type=int, default=6)
        p.add_argument("--tol", type=float, default=1e-10)

    p = sub.add_parser("solve", help="solve at a single mesh level")
    add_common(p)
    p.add_argument("--shift", type=float, default=None)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("converge", help="refinement study with rates")
    add_common(p, levels=True)
    p.add_argument("--csv", default=None)
    p.add_argument("--plotdata", default=None)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("verify-deflation", help="dense-oracle check of the reduction")
    add_common(p)
    p.add_argument("--nmax", type=int, default=2000)
    p.set_defaults(func=cmd_verify_deflation)

    p = sub.add_parser("dirichlet", help="first Dirichlet Laplacian eigenvalue")
    p.add_argument("--domain", required=True)
    p.add_argument("--level", type=int, default=None)
    p.set_defaults(func=cmd_dirichlet)

    p = sub.add_parser("preset", help="run a named benchmark experiment")
    p.add_argument("name", help="ex1..ex8")
    p.add_argument("--max-level", type=int, default=None)
    p.add_argument("--count", type=int, default=6)
    p.add_argument("--csv-dir", default=None)
    p.set_defaults(func=cmd_preset)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (MeshError, MaterialError, AssemblyError, HarnessError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
