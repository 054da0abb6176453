"""Anisotropy matrix handling: regime classification and bilinear-form weights.

The constant SPD matrix ``A`` must satisfy either ``kappa_sup < 1``
(regime I) or ``kappa_star > 1`` (regime II).  Regime I works with the
transform ``P = (inv(A) - I)^-1``, regime II with ``Q = (A - I)^-1``.
Assembly consumes the weight triple ``(W_grad, W_cross, W_mass)``:
``(P, P, I+P)`` in regime I and ``(I+Q, Q, Q)`` in regime II.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SYM_TOL = 1e-14


class MaterialError(ValueError):
    """Anisotropy matrix outside the supported theory."""


@dataclass(frozen=True)
class MaterialModel:
    """Validated anisotropy matrix with derived transforms.

    ``transform`` holds P in regime I and Q in regime II.
    """

    A: np.ndarray
    kappa_star: float
    kappa_sup: float
    regime: str  # "I" | "II"
    transform: np.ndarray
    W_grad: np.ndarray
    W_cross: np.ndarray
    W_mass: np.ndarray

    def __post_init__(self):
        for arr in (self.A, self.transform, self.W_grad, self.W_cross, self.W_mass):
            arr.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def inv_norm_bound(self) -> float:
        """``1 / ||inv(A)||_2``, i.e. the smallest eigenvalue of A."""
        return self.kappa_star


def make_material(A) -> MaterialModel:
    """Classify an SPD matrix and populate transforms and assembly weights.

    Raises
    ------
    MaterialError
        If A is not symmetric positive definite, or if its spectrum
        straddles 1 (``kappa_star <= 1 <= kappa_sup``), which is outside
        the theory.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] not in (2, 3):
        raise MaterialError(f"A must be 2x2 or 3x3, got shape {A.shape}")
    scale = max(1.0, float(np.abs(A).max()))
    if np.abs(A - A.T).max() > _SYM_TOL * scale:
        raise MaterialError("A is not symmetric")
    A = 0.5 * (A + A.T)
    eigs = np.linalg.eigvalsh(A)
    if eigs[0] <= 0.0:
        raise MaterialError(f"A is not positive definite (min eigenvalue {eigs[0]:.3e})")
    kappa_star, kappa_sup = float(eigs[0]), float(eigs[-1])
    d = A.shape[0]
    I = np.eye(d)
    if kappa_sup < 1.0:
        # P = (inv(A) - I)^-1 = (I - A)^-1 A, stable since I - A is SPD here
        P = np.linalg.solve(I - A, A)
        P = 0.5 * (P + P.T)
        return MaterialModel(
            A=A, kappa_star=kappa_star, kappa_sup=kappa_sup, regime="I",
            transform=P, W_grad=P, W_cross=P, W_mass=I + P,
        )
    if kappa_star > 1.0:
        Q = np.linalg.inv(A - I)
        Q = 0.5 * (Q + Q.T)
        return MaterialModel(
            A=A, kappa_star=kappa_star, kappa_sup=kappa_sup, regime="II",
            transform=Q, W_grad=I + Q, W_cross=Q, W_mass=Q,
        )
    raise MaterialError(
        "out of theory: the spectrum of A must lie entirely below or "
        f"entirely above 1 (got [{kappa_star:.6g}, {kappa_sup:.6g}])"
    )


def direct_weights(m: MaterialModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Weights for assembling the reduced blocks without matrix products.

    Eliminating the piecewise-constant field by its block-diagonal mass
    inverse collapses the Schur weights to closed forms:

    * regime I:  ``(A, A, A - I)``
    * regime II: ``(I, I, I - A)``

    The third weight is ``-inv(W_mass)`` in both regimes and is negative
    definite, matching the sign of the eliminated block.
    """
    d = m.dim
    I = np.eye(d)
    if m.regime == "I":
        return m.A.copy(), m.A.copy(), m.A - I
    return I, I.copy(), I - m.A


_PRESETS = {
    "A1": np.eye(2) / 4.0,
    "A2": np.diag([1.0 / 2.0, 1.0 / 8.0]),
    "A3": np.diag([1.0 / 6.0, 1.0 / 8.0]),
    "A4": np.array([[0.1372, 0.0189], [0.0189, 0.1545]]),
    "A5": 11.0 * np.eye(3),
    "A6": np.eye(3) / 4.0,
    "A7": np.diag([1.0 / 4.0, 1.0 / 2.0, 1.0 / 8.0]),
    "A8": np.array(
        [
            [1.0 / 4.0, -1.0 / 8.0, 0.0],
            [-1.0 / 8.0, 3.0 / 8.0, -1.0 / 8.0],
            [0.0, -1.0 / 8.0, 1.0 / 4.0],
        ]
    ),
}


def material_preset(name: str) -> MaterialModel:
    """Named benchmark matrices A1..A8 (A1-A4 are 2D, A5-A8 are 3D)."""
    if name not in _PRESETS:
        raise MaterialError(f"unknown material preset {name!r}; choose from {sorted(_PRESETS)}")
    return make_material(_PRESETS[name])


def parse_material(text: str, dim: int | None = None) -> MaterialModel:
    """Build a material from a preset name or a flat row-major entry list."""
    text = text.strip()
    if text in _PRESETS:
        m = material_preset(text)
    else:
        vals = [float(tok) for tok in text.replace(",", " ").split()]
        n = {4: 2, 9: 3}.get(len(vals))
        if n is None:
            raise MaterialError(
                f"expected a preset name or 4/9 matrix entries, got {len(vals)} values"
            )
        m = make_material(np.asarray(vals).reshape(n, n))
    if dim is not None and m.dim != dim:
        raise MaterialError(f"material is {m.dim}D but the domain is {dim}D")
    return m
