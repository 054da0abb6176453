"""Shift-invert Arnoldi with thick (Krylov-Schur) restarts.

The reduced mass matrix is indefinite and singular, so no usable inner
product exists for a Lanczos recurrence; plain Arnoldi runs on the
shift-inverted operator ``x -> solve(K - sigma*M, M x)`` instead.  Ritz
values ``theta`` map back through ``lambda = sigma + 1/theta``; residuals
are measured against the original pencil.  The pencil keeps some infinite
eigenvalues even after deflation; their artifacts show up as Ritz values
with negligible ``theta`` or Ritz vectors in the numerical null space of
the mass matrix, and both are discarded.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from ..assembly import assemble_dirichlet_laplacian
from ..deflation import ReducedPencil
from ..material import MaterialModel
from ..mesh import Mesh
from .factorize import SingularFactorError, factorize
from .ordering import order_key

logger = logging.getLogger(__name__)


class EigensolverError(RuntimeError):
    """Unrecoverable eigensolver failure (not mere nonconvergence)."""


@dataclass(frozen=True)
class ShiftInvertConfig:
    """Parameters of the shift-invert iteration.

    ``sigma`` defaults to the Dirichlet-based lower bound when driven
    through :func:`default_shift`; the solver itself requires it set.
    """

    count: int = 6
    sigma: float | None = None
    krylov_dim: int | None = None  # default 3*count + 20
    tol: float = 1e-10
    max_restarts: int = 50
    imag_threshold: float = 1e-8
    theta_cutoff: float = 1e-12
    null_tol: float = 1e-5
    seed: int = 20240801

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not 0.0 < self.tol < 1.0:
            raise ValueError("tol must be in (0, 1)")
        if self.krylov_dim is not None and self.krylov_dim <= self.count:
            raise ValueError("krylov_dim must exceed count")

    @property
    def dim(self) -> int:
        return self.krylov_dim if self.krylov_dim is not None else 3 * self.count + 20


@dataclass(frozen=True)
class EigenPair:
    """One converged eigenpair of the pencil."""

    lam: complex
    residual: float
    vector: np.ndarray
    k: float | None = None  # sqrt(lam), only for the real positive view

    def __post_init__(self):
        self.vector.flags.writeable = False


@dataclass(frozen=True)
class EigenSolution:
    """Converged eigenpairs nearest the shift, listed in eigenvalue order."""

    pairs: tuple[EigenPair, ...]
    sigma: float
    converged: bool
    restarts: int
    config: ShiftInvertConfig
    factor_nnz: int = 0
    message: str = ""

    def real_pairs(self) -> tuple[EigenPair, ...]:
        """The real positive view: pairs that carry a wavenumber ``k``.

        Both members of a nearly-real conjugate pair qualify, so multiple
        eigenvalues keep their multiplicity; only the complex
        representation is collapsed (``k`` uses the common real part).
        """
        out = [p for p in self.pairs if p.k is not None]
        out.sort(key=lambda p: order_key(p.lam))
        return tuple(out)

    def real_k(self) -> list[float]:
        return [p.k for p in self.real_pairs()]


def _operator(K: sp.spmatrix, M: sp.spmatrix, sigma: float):
    """Factorize K - sigma*M, retrying with a perturbed shift if singular."""
    M = M.tocsr()
    shift = sigma
    last_exc: Exception | None = None
    for attempt in range(4):
        try:
            fac = factorize((K - shift * M).tocsc())
            return fac, M, shift
        except SingularFactorError as exc:
            last_exc = exc
            bump = 1e-3 * abs(shift) if shift != 0.0 else 1e-3
            shift = shift + bump * (attempt + 1)
            logger.warning("shift %g singular, retrying with %g", sigma, shift)
    raise EigensolverError(f"factorization singular after retries: {last_exc}")


def _krylov_schur(
    apply_op,
    n: int,
    count: int,
    m: int,
    max_restarts: int,
    theta_cutoff: float,
    inner_tol: float,
    rng: np.random.Generator,
):
    """Run thick-restart Arnoldi; return (theta, vectors, restarts, stalled).

    ``theta`` are the Ritz values of the shift-inverted operator with
    magnitude above ``theta_cutoff``, ordered by decreasing magnitude,
    with Ritz vectors as columns of ``vectors``.
    """
    m = max(min(m, n - 1), min(n - 1, count + 2))
    keep = min(2 * count, m - 1)

    V = np.zeros((n, m + 1))
    H = np.zeros((m + 1, m))
    v0 = apply_op(rng.standard_normal(n))  # purge the operator's null space
    nrm = np.linalg.norm(v0)
    if nrm == 0.0:
        raise EigensolverError("operator annihilated the start vector")
    V[:, 0] = v0 / nrm
    j0 = 0

    def expand(j0_local: int) -> None:
        for j in range(j0_local, m):
            w = apply_op(V[:, j])
            h = V[:, : j + 1].T @ w
            w = w - V[:, : j + 1] @ h
            h2 = V[:, : j + 1].T @ w
            w = w - V[:, : j + 1] @ h2
            h += h2
            beta = np.linalg.norm(w)
            H[: j + 1, j] = h
            H[j + 1, j] = beta
            if beta <= 1e-14 * max(np.abs(h).max(), 1.0):
                # invariant subspace: continue from a fresh random direction
                v = rng.standard_normal(n)
                v -= V[:, : j + 1] @ (V[:, : j + 1].T @ v)
                v /= np.linalg.norm(v)
                V[:, j + 1] = v
            else:
                V[:, j + 1] = w / beta

    restarts = 0
    for restart in range(max_restarts + 1):
        expand(j0)
        Hm = H[:m, :m]
        beta_m = H[m, m - 1]
        theta, S = np.linalg.eig(Hm)
        res_est = np.abs(beta_m * S[m - 1, :])
        active = np.abs(theta) > theta_cutoff
        order = np.argsort(-np.abs(theta))
        order = order[active[order]]
        wanted = order[:count]
        if len(wanted) == count and np.all(
            res_est[wanted] <= inner_tol * np.abs(theta[wanted])
        ):
            break
        if restart == max_restarts:
            break
        # thick restart: keep the dominant Ritz values (Schur form)
        p = min(keep, max(len(order), 1))
        mags = np.abs(theta[order])
        tau = mags[p - 1] if len(mags) >= p else 0.0

        def select(ar, ai):
            return np.hypot(ar, ai) >= tau * (1.0 - 1e-12)

        T, Z, sdim = scipy.linalg.schur(Hm, output="real", sort=select)
        sdim = int(sdim)
        if sdim < 1 or sdim > m - 1:
            sdim = min(max(sdim, 1), m - 1)
        Vk = V[:, :m] @ Z[:, :sdim]
        spike = beta_m * Z[m - 1, :sdim]
        V[:, :sdim] = Vk
        V[:, sdim] = V[:, m]
        V[:, sdim + 1 :] = 0.0
        H[:, :] = 0.0
        H[:sdim, :sdim] = T[:sdim, :sdim]
        H[sdim, :sdim] = spike
        j0 = sdim
        restarts += 1

    Hm = H[:m, :m]
    beta_m = H[m, m - 1]
    theta, S = np.linalg.eig(Hm)
    res_est = np.abs(beta_m * S[m - 1, :])
    active = np.abs(theta) > theta_cutoff
    order = np.argsort(-np.abs(theta))
    order = order[active[order]]
    good = order[res_est[order] <= np.maximum(inner_tol * np.abs(theta[order]), 1e-300)]
    stalled = len(good) < count
    take = order if stalled else good
    vectors = V[:, :m] @ S[:, take]
    return theta[take], vectors, restarts, stalled


def _pencil_residual(K, M, lam: complex, x: np.ndarray, knorm: float, mnorm: float) -> float:
    xn = np.linalg.norm(x)
    r = K @ x - lam * (M @ x)
    return float(np.linalg.norm(r) / ((knorm + abs(lam) * mnorm) * xn))


def shift_invert_pencil(
    K: sp.spmatrix, M: sp.spmatrix, cfg: ShiftInvertConfig
) -> EigenSolution:
    """Eigenvalues of ``K x = lam M x`` nearest ``cfg.sigma``.

    Returns at least ``cfg.count`` converged pairs when the iteration
    succeeds; on nonconvergence the partial result is returned with
    ``converged=False`` and an explanatory message.
    """
    if cfg.sigma is None:
        raise ValueError("cfg.sigma must be set (see default_shift)")
    n = K.shape[0]
    fac, Mcsr, sigma = _operator(K, M, float(cfg.sigma))

    def apply_op(x):
        return fac.solve(Mcsr @ x)

    rng = np.random.default_rng(cfg.seed)
    inner_tol = min(cfg.tol, 1e-11)
    theta, vectors, restarts, stalled = _krylov_schur(
        apply_op,
        n,
        cfg.count,
        cfg.dim,
        cfg.max_restarts,
        cfg.theta_cutoff,
        inner_tol,
        rng,
    )

    knorm = spla_norm_inf(K)
    mnorm = spla_norm_inf(M)
    pairs = []
    for i, th in enumerate(theta):
        lam = sigma + 1.0 / th
        x = vectors[:, i]
        if np.abs(x.imag).max() == 0.0:
            x = x.real
        # vectors in the numerical null space of M carry the remaining
        # infinite eigenvalues; the |lam|-scaled residual cannot see them
        mx = np.linalg.norm(Mcsr @ x)
        if mx <= cfg.null_tol * mnorm * np.linalg.norm(x):
            continue
        res = _pencil_residual(K, Mcsr, lam, x, knorm, mnorm)
        if res <= cfg.tol:
            lam = complex(lam)
            k = None
            if lam.real > 0.0 and abs(lam.imag) <= cfg.imag_threshold * abs(lam):
                k = math.sqrt(lam.real)
            pairs.append(EigenPair(lam=lam, residual=res, vector=x.copy(), k=k))
    converged = len(pairs) >= cfg.count and not stalled
    message = ""
    if not converged:
        message = (
            f"{len(pairs)} of {cfg.count} pairs converged after {restarts} restarts"
        )
        logger.warning(message)
    pairs.sort(key=lambda p: order_key(p.lam))
    return EigenSolution(
        pairs=tuple(pairs),
        sigma=sigma,
        converged=converged,
        restarts=restarts,
        config=cfg,
        factor_nnz=fac.nnz,
        message=message,
    )


def shift_invert_eigs(rp: ReducedPencil, cfg: ShiftInvertConfig) -> EigenSolution:
    """Solve the reduced transmission pencil near the shift."""
    return shift_invert_pencil(rp.K_hat_full, rp.M_hat, cfg)


def spla_norm_inf(S: sp.spmatrix) -> float:
    return float(abs(S).sum(axis=1).max())


def first_dirichlet_eigenvalue(mesh: Mesh, tol: float = 1e-10) -> float:
    """Smallest Dirichlet Laplacian eigenvalue on the mesh (P1 estimate)."""
    pair = assemble_dirichlet_laplacian(mesh)
    cfg = ShiftInvertConfig(count=1, sigma=0.0, krylov_dim=24, tol=tol)
    sol = shift_invert_pencil(pair.stiff_int, pair.mass_int, cfg)
    if not sol.pairs:
        raise EigensolverError("Dirichlet eigensolve failed")
    return float(min(p.lam.real for p in sol.pairs))


def default_shift(mesh: Mesh, material: MaterialModel, safety: float = 0.99) -> float:
    """Shift below the smallest real transmission eigenvalue.

    Uses the bound ``lam >= kappa_1(Omega) * b`` with ``b`` the smallest
    eigenvalue of A below 1 (regime I) or 1 (regime II), scaled by
    ``safety``.
    """
    kappa1 = first_dirichlet_eigenvalue(mesh)
    bound = material.inv_norm_bound if material.regime == "I" else 1.0
    return safety * kappa1 * bound
