"""Total order on complex numbers used to list eigenvalues.

``c1`` precedes ``c2`` when both are zero, when ``|c1| < |c2|``, or when
the moduli agree (nonzero) and the argument of ``c1`` (taken in
``[0, 2*pi)``) is at least that of ``c2``.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

_TWO_PI = 2.0 * math.pi


def polar_angle(c: complex) -> float:
    """Argument of ``c`` in ``[0, 2*pi)``; 0 for ``c == 0``."""
    if c == 0:
        return 0.0
    theta = cmath.phase(c)
    if theta < 0.0:
        theta += _TWO_PI
    return theta


def eqslantless(c1: complex, c2: complex) -> bool:
    """Whether ``c1`` precedes (or ties) ``c2`` in the eigenvalue order."""
    r1, r2 = abs(c1), abs(c2)
    if r1 == 0.0 and r2 == 0.0:
        return True
    if r1 < r2:
        return True
    if r1 == r2:
        return polar_angle(c1) >= polar_angle(c2)
    return False


def order_key(c: complex) -> tuple[float, float]:
    """Sort key realizing the order: ascending modulus, descending argument."""
    r = abs(c)
    return (r, -polar_angle(c) if r > 0.0 else 0.0)


def sort_eqslantless(values) -> list[complex]:
    """Values sorted ascending in the eigenvalue order."""
    return sorted((complex(v) for v in np.asarray(values).ravel()), key=order_key)
