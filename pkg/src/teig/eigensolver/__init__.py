"""Eigenvalue computation: shift-invert Krylov solver and dense oracle."""

from .arnoldi import (
    EigenPair,
    EigenSolution,
    EigensolverError,
    ShiftInvertConfig,
    default_shift,
    first_dirichlet_eigenvalue,
    shift_invert_eigs,
    shift_invert_pencil,
)
from .dense import (
    OracleSpectrum,
    QZConvergenceError,
    dense_oracle,
    generalized_schur_eigenvalues,
)
from .factorize import Factorization, SingularFactorError, factorize
from .ordering import eqslantless, order_key, polar_angle, sort_eqslantless

__all__ = [
    "EigenPair",
    "EigenSolution",
    "EigensolverError",
    "Factorization",
    "OracleSpectrum",
    "QZConvergenceError",
    "ShiftInvertConfig",
    "SingularFactorError",
    "default_shift",
    "dense_oracle",
    "eqslantless",
    "factorize",
    "first_dirichlet_eigenvalue",
    "generalized_schur_eigenvalues",
    "order_key",
    "polar_angle",
    "shift_invert_eigs",
    "shift_invert_pencil",
    "sort_eqslantless",
]
