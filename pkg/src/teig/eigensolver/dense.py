"""Dense full-spectrum oracle for generalized eigenvalue pencils.

Implements the generalized Schur reduction: Hessenberg-triangular form
followed by single-shift QZ iteration in complex arithmetic, with zero
diagonal entries of the triangular factor chased to the bottom so that
infinite eigenvalues deflate explicitly.  Eigenvalues are returned as
``(alpha, beta)`` pairs; ``beta == 0`` marks an infinite eigenvalue.

This is a verification tool for modest sizes, not a production solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .ordering import sort_eqslantless

_EPS = np.finfo(float).eps
_SAFMIN = np.finfo(float).tiny


class QZConvergenceError(RuntimeError):
    """QZ iteration failed to converge within the iteration budget."""


def _zlartg(f: complex, g: complex) -> tuple[float, complex, complex]:
    """Complex Givens rotation: [[c, s], [-conj(s), c]] @ [f, g] = [r, 0]."""
    if g == 0:
        return 1.0, 0.0 + 0.0j, f
    if f == 0:
        ag = abs(g)
        return 0.0, g.conjugate() / ag, complex(ag)
    af = abs(f)
    norm = math.hypot(af, abs(g))
    c = af / norm
    phase = f / af
    s = phase * g.conjugate() / norm
    return c, s, phase * norm


def _rot_rows(M: np.ndarray, i: int, j: int, c: float, s: complex, k0: int = 0) -> None:
    ri = M[i, k0:].copy()
    rj = M[j, k0:]
    M[i, k0:] = c * ri + s * rj
    M[j, k0:] = -np.conj(s) * ri + c * rj


def _rot_cols(M: np.ndarray, kp: int, kz: int, c: float, s: complex, r1: int) -> None:
    """Mix columns so entries rotate like rows of the transpose; rows [0, r1)."""
    cp = M[:r1, kp].copy()
    cz = M[:r1, kz]
    M[:r1, kp] = c * cp + s * cz
    M[:r1, kz] = -np.conj(s) * cp + c * cz


def _hessenberg_triangular(A: np.ndarray, B: np.ndarray) -> None:
    """Reduce (A, B) in place to Hessenberg / upper-triangular form."""
    n = A.shape[0]
    Q, R = np.linalg.qr(B)
    B[:, :] = R
    A[:, :] = Q.conj().T @ A
    for j in range(n - 2):
        for i in range(n - 1, j + 1, -1):
            c, s, r = _zlartg(A[i - 1, j], A[i, j])
            _rot_rows(A, i - 1, i, c, s, k0=j)
            A[i - 1, j] = r
            A[i, j] = 0.0
            _rot_rows(B, i - 1, i, c, s, k0=i - 1)
            # kill the fill B[i, i-1] with a column rotation (pivot column i)
            c, s, r = _zlartg(B[i, i], B[i, i - 1])
            _rot_cols(B, i, i - 1, c, s, r1=i + 1)
            B[i, i] = r
            B[i, i - 1] = 0.0
            _rot_cols(A, i, i - 1, c, s, r1=n)


def _trailing_shift(A: np.ndarray, B: np.ndarray, ilast: int) -> complex:
    """Wilkinson-style shift from the trailing 2x2 pencil."""
    a11, a12 = A[ilast - 1, ilast - 1], A[ilast - 1, ilast]
    a21, a22 = A[ilast, ilast - 1], A[ilast, ilast]
    b11, b12 = B[ilast - 1, ilast - 1], B[ilast - 1, ilast]
    b22 = B[ilast, ilast]
    # M = A2 @ inv(B2) with B2 upper triangular
    m11 = a11 / b11
    m12 = (a12 - m11 * b12) / b22
    m21 = a21 / b11
    m22 = (a22 - m21 * b12) / b22
    tr = m11 + m22
    det = m11 * m22 - m12 * m21
    disc = np.sqrt(complex(tr * tr - 4.0 * det))
    r1 = 0.5 * (tr + disc)
    r2 = 0.5 * (tr - disc)
    mu = r1 if abs(r1 - m22) <= abs(r2 - m22) else r2
    if not np.isfinite(mu):
        mu = m22 if np.isfinite(m22) else 0.0
    return complex(mu)


def generalized_schur_eigenvalues(
    A, B, max_iter_factor: int = 40
) -> tuple[np.ndarray, np.ndarray]:
    """All generalized eigenvalues of the pencil (A, B) as (alpha, beta).

    Raises
    ------
    QZConvergenceError
        If the iteration budget ``max_iter_factor * n`` is exhausted.
    """
    A = np.array(A, dtype=complex)
    B = np.array(B, dtype=complex)
    n = A.shape[0]
    if A.shape != (n, n) or B.shape != (n, n):
        raise ValueError("pencil matrices must be square and of equal size")
    alpha = np.empty(n, dtype=complex)
    beta = np.empty(n, dtype=complex)
    if n == 0:
        return alpha, beta
    if n == 1:
        return A[0, 0].reshape(1), B[0, 0].reshape(1)

    _hessenberg_triangular(A, B)
    anorm = max(np.abs(A).sum(axis=0).max(), _SAFMIN)
    bnorm = max(np.abs(B).sum(axis=0).max(), _SAFMIN)
    atol = max(_SAFMIN, _EPS * anorm)
    btol = max(_SAFMIN, _EPS * bnorm)

    def subdiag_small(j: int) -> bool:
        return abs(A[j, j - 1]) <= atol

    ilast = n - 1
    iters = 0
    stagnant = 0
    max_iters = max_iter_factor * n
    while ilast >= 0:
        if ilast == 0:
            alpha[0], beta[0] = A[0, 0], B[0, 0]
            ilast = -1
            continue
        if subdiag_small(ilast):
            A[ilast, ilast - 1] = 0.0
            alpha[ilast], beta[ilast] = A[ilast, ilast], B[ilast, ilast]
            ilast -= 1
            stagnant = 0
            continue

        ifirst = ilast
        while ifirst > 0:
            if subdiag_small(ifirst):
                A[ifirst, ifirst - 1] = 0.0
                break
            ifirst -= 1

        # a negligible diagonal of B inside the block: chase it to the
        # bottom and deflate an infinite eigenvalue
        jzero = -1
        for j in range(ifirst, ilast + 1):
            if abs(B[j, j]) <= btol:
                jzero = j
                break
        if jzero >= 0:
            B[jzero, jzero] = 0.0
            for jch in range(jzero, ilast):
                c, s, r = _zlartg(B[jch, jch + 1], B[jch + 1, jch + 1])
                _rot_rows(B, jch, jch + 1, c, s, k0=jch + 1)
                B[jch, jch + 1] = r
                B[jch + 1, jch + 1] = 0.0
                _rot_rows(A, jch, jch + 1, c, s, k0=max(ifirst - 1, 0))
                if jch > ifirst:
                    # row mix spilled A into (jch+1, jch-1); rotate it away
                    c, s, r = _zlartg(A[jch + 1, jch], A[jch + 1, jch - 1])
                    _rot_cols(A, jch, jch - 1, c, s, r1=jch + 2)
                    A[jch + 1, jch] = r
                    A[jch + 1, jch - 1] = 0.0
                    _rot_cols(B, jch, jch - 1, c, s, r1=jch + 1)
            # B[ilast, ilast] is now zero: split off an infinite eigenvalue
            c, s, r = _zlartg(A[ilast, ilast], A[ilast, ilast - 1])
            _rot_cols(A, ilast, ilast - 1, c, s, r1=ilast + 1)
            A[ilast, ilast] = r
            A[ilast, ilast - 1] = 0.0
            _rot_cols(B, ilast, ilast - 1, c, s, r1=ilast)
            alpha[ilast], beta[ilast] = A[ilast, ilast], 0.0
            ilast -= 1
            stagnant = 0
            continue

        iters += 1
        stagnant += 1
        if iters > max_iters:
            raise QZConvergenceError(
                f"QZ did not converge after {iters} iterations (block {ifirst}..{ilast})"
            )
        if stagnant % 12 == 0:
            # exceptional shift to break limit cycles
            mu = (A[ilast, ilast] + 1.5 * abs(A[ilast, ilast - 1])) / B[ilast, ilast]
        else:
            mu = _trailing_shift(A, B, ilast)

        # implicit single-shift bulge chase on [ifirst, ilast]
        for k in range(ifirst, ilast):
            if k == ifirst:
                f = A[ifirst, ifirst] - mu * B[ifirst, ifirst]
                g = A[ifirst + 1, ifirst]
                c, s, _ = _zlartg(f, g)
            else:
                c, s, r = _zlartg(A[k, k - 1], A[k + 1, k - 1])
                A[k, k - 1] = r
                A[k + 1, k - 1] = 0.0
            _rot_rows(A, k, k + 1, c, s, k0=k)
            _rot_rows(B, k, k + 1, c, s, k0=k)
            # kill B fill at (k+1, k), creating the next bulge in A
            c, s, r = _zlartg(B[k + 1, k + 1], B[k + 1, k])
            _rot_cols(B, k + 1, k, c, s, r1=k + 2)
            B[k + 1, k + 1] = r
            B[k + 1, k] = 0.0
            _rot_cols(A, k + 1, k, c, s, r1=min(k + 3, ilast + 1))
    return alpha, beta


@dataclass(frozen=True)
class OracleSpectrum:
    """Full spectrum of a pencil, split into finite and infinite parts."""

    alpha: np.ndarray
    beta: np.ndarray
    finite: np.ndarray  # sorted in the eigenvalue order
    n_infinite: int

    @property
    def n(self) -> int:
        return len(self.alpha)


def dense_oracle(
    K,
    M,
    n_max: int = 2000,
    inf_ratio: float = 1e8,
    beta_rtol: float | None = None,
    max_iter_factor: int = 40,
) -> OracleSpectrum:
    """Full generalized spectrum of a (possibly sparse) pencil.

    Infinite eigenvalues are identified by thresholding ``beta``:
    ``|beta| <= beta_rtol * max|beta|`` (default ``sqrt(eps)``, the scale
    to which roundoff splits higher-order Jordan blocks at infinity), and
    additionally any ratio whose magnitude exceeds ``inf_ratio`` times
    the median finite magnitude.  Both thresholds are configurable.

    Raises
    ------
    ValueError
        If the pencil exceeds the ``n_max`` size budget.
    QZConvergenceError
        Propagated from the iteration (never silently ignored).
    """
    if sp.issparse(K):
        K = K.toarray()
    if sp.issparse(M):
        M = M.toarray()
    K = np.asarray(K)
    M = np.asarray(M)
    n = K.shape[0]
    if n > n_max:
        raise ValueError(f"pencil size {n} exceeds the dense-oracle budget {n_max}")
    alpha, beta = generalized_schur_eigenvalues(K, M, max_iter_factor=max_iter_factor)

    if beta_rtol is None:
        beta_rtol = math.sqrt(_EPS)
    # anchor the scale on the input matrix, not on max|beta|, which is
    # itself roundoff junk when the whole spectrum is infinite
    bscale = max(np.abs(M).sum(axis=0).max(), _SAFMIN)
    finite_mask = np.abs(beta) > max(beta_rtol, n * _EPS) * bscale
    lam = np.full(n, np.inf + 0j, dtype=complex)
    lam[finite_mask] = alpha[finite_mask] / beta[finite_mask]
    finite_mask &= np.isfinite(lam)
    if finite_mask.any():
        med = np.median(np.abs(lam[finite_mask]))
        if med > 0.0:
            finite_mask &= np.abs(lam) <= inf_ratio * med
    finite = np.asarray(sort_eqslantless(lam[finite_mask]), dtype=complex)
    return OracleSpectrum(
        alpha=alpha, beta=beta, finite=finite, n_infinite=int(n - finite_mask.sum())
    )
