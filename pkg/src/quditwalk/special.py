"""Gauss hypergeometric function by power series, with the ``1/z`` continuation."""

from __future__ import annotations

import cmath
import math

from .errors import DomainError

__all__ = ["hyp2f1_series", "hyp2f1"]

SERIES_RTOL = 1e-14
MAX_TERMS = 10_000


def _nonpositive_integer(x: float) -> bool:
    return x <= 0 and abs(x - round(x)) < 1e-12


def hyp2f1_series(a: float, b: float, c: float, z: complex) -> complex:
    """
    Direct power series of ``2F1(a, b; c; z)``.

    Stops when a term falls below ``SERIES_RTOL`` times the running sum, or after
    ``MAX_TERMS`` terms. A nonpositive integer ``a`` or ``b`` terminates the
    series and any ``z`` is accepted; otherwise ``|z| <= 1`` is required.
    """
    if _nonpositive_integer(c):
        raise DomainError(f"c = {c} is a nonpositive integer")
    terminating = _nonpositive_integer(a) or _nonpositive_integer(b)
    if not terminating and abs(z) > 1:
        raise DomainError(f"power series diverges at |z| = {abs(z):.6g}")
    total = term = complex(1.0)
    for n in range(MAX_TERMS):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * z
        total += term
        if term == 0 or abs(term) <= SERIES_RTOL * abs(total):
            break
    return total


def hyp2f1(a: float, b: float, c: float, z: complex, log_neg_z: complex | None = None) -> complex:
    """
    ``2F1(a, b; c; z)``, on the principal branch unless told otherwise.

    Uses the power series for ``|z| <= 1`` and the standard connection formula in
    ``1/z`` outside the unit disc, which requires ``a - b`` not to be an integer.
    ``log_neg_z`` selects the branch of ``log(-z)`` used by that formula. Without
    it, points on the cut ``z > 1`` outside the terminating case raise
    ``DomainError``.
    """
    z = complex(z)
    if abs(z) <= 1 or _nonpositive_integer(a) or _nonpositive_integer(b):
        return hyp2f1_series(a, b, c, z)
    if abs(a - b - round(a - b)) < 1e-12:
        raise DomainError("1/z continuation needs a - b to be a non-integer")
    if log_neg_z is None:
        if z.imag == 0 and z.real > 1:
            raise DomainError(f"z = {z.real} lies on the branch cut")
        log_neg_z = cmath.log(-z)
    w = 1 / z
    t1 = (
        math.gamma(c) * math.gamma(b - a) / (math.gamma(b) * math.gamma(c - a))
        * cmath.exp(-a * log_neg_z) * hyp2f1_series(a, a - c + 1, a - b + 1, w)
    )
    t2 = (
        math.gamma(c) * math.gamma(a - b) / (math.gamma(a) * math.gamma(c - b))
        * cmath.exp(-b * log_neg_z) * hyp2f1_series(b, b - c + 1, b - a + 1, w)
    )
    return t1 + t2
