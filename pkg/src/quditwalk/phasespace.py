"""
Spherical Q functions of spin-coherent cat states.

The cat states are ``psi_j = (|S1> + sign_j |S2>)/sqrt2`` with ``sign_1 = +1``,
``sign_2 = -1``, ``S1 = |s, theta, 0>`` and ``S2 = |s, -theta, 0>``. On the sphere
point ``(alpha, beta)`` write ``q_pm = <s, alpha, beta | s, +-theta, 0>``. Then

* ``Q_j = |q_+ + sign_j q_-|^2 / 2``
* ``Q_inc = (|q_+|^2 + |q_-|^2) / 2``, the Q function of the equal mixture
* ``interference = Re[q_+ conj(q_-)]``, so ``Q_j = Q_inc + sign_j * interference``

All fields are plain arrays on a :class:`SphericalGrid`; nothing here renders.
"""

from __future__ import annotations

import cmath
import csv
import logging
import math
from dataclasses import dataclass, field
from typing import IO

import numpy as np
from numpy.typing import NDArray

from .errors import DomainError, InvalidParameterError
from .special import hyp2f1
from .targets import scs_amplitudes

__all__ = [
    "SphericalGrid",
    "QField",
    "FIELD_KINDS",
    "STATES",
    "scs_overlap",
    "husimi_q",
    "q_incoherent",
    "interference_term",
    "coherence_ratio",
    "state_field",
    "integrate",
    "closed_form_q",
    "export_polar",
    "write_csv",
    "count_lobes",
    "great_circle_interference",
    "interference_lobes",
]

log = logging.getLogger(__name__)

FIELD_KINDS = ("q", "qinc", "interf", "ratio")
STATES = ("psi1", "psi2", "inc")
RATIO_FLOOR = 1e-12
DEFAULT_SPIN = 2.5
DEFAULT_THETA = math.pi / 2
# keeps rounding at |T T| = 1 (e.g. alpha = theta = pi/2) outside the closed-form domain
DOMAIN_MARGIN = 1e-12


def _check_spin(s: float) -> float:
    two_s = 2 * s
    if not math.isfinite(two_s) or two_s < 0 or abs(two_s - round(two_s)) > 1e-12:
        raise InvalidParameterError(f"2s must be a nonnegative integer, got s = {s}")
    return round(two_s) / 2


def _check_j(j: int) -> int:
    if j not in (1, 2):
        raise InvalidParameterError(f"cat index j must be 1 or 2, got {j}")
    return 1 if j == 1 else -1


@dataclass(frozen=True)
class SphericalGrid:
    """
    Product grid of polar angles ``alpha`` in ``[0, pi]`` and azimuths ``beta`` in ``[0, 2 pi)``.

    ``weights`` holds quadrature weights for ``d(cos alpha)`` when the grid was
    built by :meth:`gauss`; :meth:`uniform` grids carry none.
    """

    alpha: NDArray[np.float64]
    beta: NDArray[np.float64]
    weights: NDArray[np.float64] | None = field(default=None, compare=False)

    def __post_init__(self):
        a = np.array(self.alpha, dtype=float)
        b = np.array(self.beta, dtype=float)
        for name, x, hi, closed in (("alpha", a, math.pi, True), ("beta", b, 2 * math.pi, False)):
            if x.ndim != 1 or x.size == 0:
                raise InvalidParameterError(f"{name} must be a non-empty 1-d array")
            if np.any(np.diff(x) <= 0):
                raise InvalidParameterError(f"{name} samples must be strictly increasing")
            if x[0] < 0 or x[-1] > hi or (not closed and x[-1] >= hi):
                raise InvalidParameterError(f"{name} samples outside their range")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        if self.weights is not None:
            w = np.array(self.weights, dtype=float)
            if w.shape != a.shape:
                raise InvalidParameterError("one quadrature weight per alpha sample")
            w.flags.writeable = False
            object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, n_alpha: int, n_beta: int) -> "SphericalGrid":
        """Equally spaced ``alpha`` including both poles, half-open ``beta``."""
        if n_alpha < 2 or n_beta < 1:
            raise InvalidParameterError("a uniform grid needs n_alpha >= 2 and n_beta >= 1")
        return cls(np.linspace(0.0, math.pi, n_alpha), 2 * math.pi * np.arange(n_beta) / n_beta)

    @classmethod
    def gauss(cls, n_alpha: int, n_beta: int) -> "SphericalGrid":
        """Gauss-Legendre nodes in ``cos alpha`` times equally spaced ``beta``."""
        if n_alpha < 1 or n_beta < 1:
            raise InvalidParameterError("grid resolution must be positive")
        x, w = np.polynomial.legendre.leggauss(n_alpha)
        return cls(np.arccos(x)[::-1], 2 * math.pi * np.arange(n_beta) / n_beta, w[::-1])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.alpha.size, self.beta.size)

    @property
    def size(self) -> int:
        return self.alpha.size * self.beta.size

    def mesh(self) -> tuple[NDArray, NDArray]:
        return np.meshgrid(self.alpha, self.beta, indexing="ij")


@dataclass(frozen=True)
class QField:
    """Real field on a grid; ``values[i, k]`` belongs to ``(alpha[i], beta[k])``."""

    grid: SphericalGrid
    values: NDArray[np.float64]
    kind: str
    sign_j: int | None = None
    spin: float = DEFAULT_SPIN

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise InvalidParameterError(f"field kind must be one of {FIELD_KINDS}, got {self.kind!r}")
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise InvalidParameterError(f"values of shape {v.shape} on a {self.grid.shape} grid")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def scs_overlap(s: float, alpha, beta, theta, phi) -> NDArray[np.complex128]:
    """``<s, alpha, beta | s, theta, phi>`` by the finite ``2s + 1`` term sum; broadcasts."""
    s = _check_spin(s)
    bra = scs_amplitudes(s, alpha, beta)
    ket = scs_amplitudes(s, theta, phi)
    out = np.sum(np.conj(bra) * ket, axis=-1)
    return out[()] if out.ndim == 0 else out


def _overlaps(grid: SphericalGrid, s: float, theta: float) -> tuple[NDArray, NDArray]:
    a, b = grid.mesh()
    return scs_overlap(s, a, b, theta, 0.0), scs_overlap(s, a, b, -theta, 0.0)


def husimi_q(j: int, grid: SphericalGrid, s: float = DEFAULT_SPIN, theta: float = DEFAULT_THETA) -> QField:
    sign = _check_j(j)
    qp, qm = _overlaps(grid, s, theta)
    return QField(grid, np.abs(qp + sign * qm) ** 2 / 2, "q", j, _check_spin(s))


def q_incoherent(grid: SphericalGrid, s: float = DEFAULT_SPIN, theta: float = DEFAULT_THETA) -> QField:
    qp, qm = _overlaps(grid, s, theta)
    return QField(grid, (np.abs(qp) ** 2 + np.abs(qm) ** 2) / 2, "qinc", None, _check_spin(s))


def interference_term(grid: SphericalGrid, s: float = DEFAULT_SPIN, theta: float = DEFAULT_THETA) -> QField:
    qp, qm = _overlaps(grid, s, theta)
    return QField(grid, np.real(qp * np.conj(qm)), "interf", None, _check_spin(s))


def _masked_ratio(num: NDArray, den: NDArray) -> NDArray:
    masked = den <= RATIO_FLOOR
    if masked.any():
        log.warning("coherence ratio: %d of %d points masked (Q_inc <= %g)", masked.sum(), den.size, RATIO_FLOOR)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(masked, np.nan, num / np.where(masked, 1.0, den))


def coherence_ratio(j: int, grid: SphericalGrid, s: float = DEFAULT_SPIN, theta: float = DEFAULT_THETA) -> QField:
    """``Q_j / Q_inc``; points where ``Q_inc <= 1e-12`` are NaN."""
    sign = _check_j(j)
    qp, qm = _overlaps(grid, s, theta)
    q_j = np.abs(qp + sign * qm) ** 2 / 2
    q_inc = (np.abs(qp) ** 2 + np.abs(qm) ** 2) / 2
    return QField(grid, _masked_ratio(q_j, q_inc), "ratio", j, _check_spin(s))


def state_field(
    state: str, kind: str, grid: SphericalGrid, s: float = DEFAULT_SPIN, theta: float = DEFAULT_THETA
) -> QField:
    """
    Field ``kind`` for ``state`` in ``psi1``, ``psi2`` (the cats) or ``inc`` (the mixture).

    ``q`` is the state's own Q function, ``qinc`` the mixture baseline,
    ``interf`` the state's interference contribution ``Q - Q_inc`` (zero for
    the mixture) and ``ratio`` is ``Q / Q_inc``.
    """
    if state not in STATES:
        raise InvalidParameterError(f"state must be one of {STATES}, got {state!r}")
    if kind not in FIELD_KINDS:
        raise InvalidParameterError(f"field kind must be one of {FIELD_KINDS}, got {kind!r}")
    s = _check_spin(s)
    j = {"psi1": 1, "psi2": 2, "inc": None}[state]
    sign = 0 if j is None else _check_j(j)
    qp, qm = _overlaps(grid, s, theta)
    inc = (np.abs(qp) ** 2 + np.abs(qm) ** 2) / 2
    interf = sign * np.real(qp * np.conj(qm))
    # the modulus form keeps Q nonnegative where inc and interf cancel
    q = inc if j is None else np.abs(qp + sign * qm) ** 2 / 2
    values = {
        "q": lambda: q,
        "qinc": lambda: inc,
        "interf": lambda: interf,
        "ratio": lambda: _masked_ratio(q, inc),
    }[kind]()
    return QField(grid, values, kind, j, s)


def integrate(f: QField) -> float:
    """``(2s + 1)/(4 pi)`` times the sphere integral of ``f``; needs a Gauss grid."""
    g = f.grid
    if g.weights is None:
        raise InvalidParameterError("integration needs a grid built with SphericalGrid.gauss")
    total = g.weights @ f.values.sum(axis=1) * (2 * math.pi / g.beta.size)
    return float((2 * f.spin + 1) / (4 * math.pi) * total)


def closed_form_q(s: float, alpha: float, beta: float, theta: float, sign: int) -> complex:
    """
    ``q_pm`` from the hypergeometric closed form.

    ``(C_a S_a C_t S_t)^s (2s)!/(s!)^2 [F(z) + F(1/z) - 1]`` with
    ``F = 2F1(1, -s; s + 1; .)``, ``z = -sign e^{-i beta} T(alpha) T(theta)`` and
    ``T(x) = tan(x/2)``. For ``sign = -1`` the factor ``(-1)^s`` is taken as
    ``exp(i pi s)``. For half-integer ``s`` the ``F(1/z)`` term is multivalued;
    its branch follows ``beta`` continuously (``arg(-1/z) = beta`` for ``sign = +1``
    and ``beta - pi`` for ``sign = -1``), matching the ``4 pi`` periodicity of the
    direct sum.

    Valid for ``alpha, theta`` in ``(0, pi)`` with ``|T(alpha) T(theta)| < 1``;
    elsewhere :class:`DomainError` is raised and :func:`scs_overlap` should be used.
    """
    s = _check_spin(s)
    if sign not in (1, -1):
        raise InvalidParameterError(f"sign must be +1 or -1, got {sign}")
    if not (0 < alpha < math.pi and 0 < theta < math.pi):
        raise DomainError("closed form needs alpha and theta in (0, pi)")
    t = math.tan(alpha / 2) * math.tan(theta / 2)
    if not t < 1 - DOMAIN_MARGIN:
        raise DomainError(f"|T(alpha) T(theta)| = {t:.6g} is not below 1")
    z = -sign * cmath.exp(-1j * beta) * t
    log_neg_inv = complex(-math.log(t), beta if sign > 0 else beta - math.pi)
    pre = math.gamma(2 * s + 1) / math.gamma(s + 1) ** 2
    base = math.sin(alpha / 2) * math.cos(alpha / 2) * math.sin(theta / 2) * math.cos(theta / 2)
    branch = 1.0 if sign > 0 else cmath.exp(1j * math.pi * s)
    f = hyp2f1(1.0, -s, s + 1.0, z) + hyp2f1(1.0, -s, s + 1.0, 1 / z, log_neg_z=log_neg_inv) - 1
    return complex(branch * pre * base**s * f)


def export_polar(f: QField) -> NDArray[np.float64]:
    """Rows ``(x, y, z, value)`` with the point at radius ``value`` along ``(alpha, beta)``."""
    a, b = f.grid.mesh()
    v = f.values
    return np.column_stack([
        (v * np.sin(a) * np.cos(b)).ravel(),
        (v * np.sin(a) * np.sin(b)).ravel(),
        (v * np.cos(a)).ravel(),
        v.ravel(),
    ])


def write_csv(f: QField, stream: IO[str], polar: bool = False) -> int:
    """Write ``alpha,beta,value`` (or ``x,y,z,value``) rows; returns the row count."""
    w = csv.writer(stream, lineterminator="\n")
    if polar:
        w.writerow(["x", "y", "z", "value"])
        rows = export_polar(f)
    else:
        w.writerow(["alpha", "beta", "value"])
        a, b = f.grid.mesh()
        rows = np.column_stack([a.ravel(), b.ravel(), f.values.ravel()])
    for r in rows:
        w.writerow([f"{x:.17g}" for x in r])
    return len(rows)


def count_lobes(values, rel_threshold: float = 1e-9) -> int:
    """
    Number of lobes of a periodic sampled function.

    A lobe is a strict local maximum of ``|values|`` with wraparound; runs of
    equal samples count once and samples below ``rel_threshold * max|values|``
    are treated as zero.
    """
    v = np.abs(np.asarray(values, dtype=float).ravel())
    if v.size < 3 or not np.all(np.isfinite(v)):
        raise InvalidParameterError("need at least 3 finite samples")
    peak = v.max()
    if peak == 0:
        return 0
    v = np.where(v < rel_threshold * peak, 0.0, v)
    # collapse plateaus into single entries (circularly)
    keep = np.r_[True, v[1:] != v[:-1]]
    runs = v[keep]
    if runs.size > 1 and runs[0] == runs[-1]:
        runs = runs[:-1]
    if runs.size < 3:
        return int(runs.size == 2 or (runs.size == 1 and runs[0] > 0))
    left, right = np.roll(runs, 1), np.roll(runs, -1)
    return int(np.sum((runs > left) & (runs > right)))


def great_circle_interference(
    s: float = DEFAULT_SPIN, n_points: int = 720
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Interference term along the great circle perpendicular to the cat axis.

    The two coherent states sit at ``+-x``; the circle is ``x = 0``, traversed
    as ``(0, sin t, cos t)``. Returns ``(t, values)``.
    """
    if n_points < 3:
        raise InvalidParameterError("need at least 3 points")
    t = 2 * math.pi * np.arange(n_points) / n_points
    y, z = np.sin(t), np.cos(t)
    alpha = np.arccos(np.clip(z, -1, 1))
    beta = np.where(y >= 0, math.pi / 2, 3 * math.pi / 2)
    qp = scs_overlap(s, alpha, beta, DEFAULT_THETA, 0.0)
    qm = scs_overlap(s, alpha, beta, -DEFAULT_THETA, 0.0)
    return t, np.real(qp * np.conj(qm))


def interference_lobes(s: float = DEFAULT_SPIN, n_points: int = 720) -> int:
    """Lobe count of :func:`great_circle_interference`."""
    return count_lobes(great_circle_interference(s, n_points)[1])
