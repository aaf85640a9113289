"""
Target qudit states and the fidelity measurement basis.

Logical index ``j = 1..d`` maps to walker sites in ascending order, so ``j = 1``
is the most negative OAM value. A spin-``s`` projection ``s_z`` sits on site
``2 s_z`` of a ``2 s``-step walk.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .core import STATE_TOL, Lattice, WalkerState
from .errors import (
    DimensionMismatchError,
    InfeasibleTargetError,
    InvalidParameterError,
    ZeroVectorError,
)

__all__ = [
    "TARGET_KINDS",
    "TargetSpec",
    "SCSParams",
    "CatalogEntry",
    "extremal_cat",
    "scs_amplitudes",
    "scs_state",
    "scs_superposition",
    "scs_cat",
    "fourier_state",
    "random_target",
    "explicit_target",
    "embed_full_lattice",
    "gram_schmidt_basis",
    "build_target",
    "table1_catalog",
    "TABLE2_AMPLITUDES",
]

TARGET_KINDS = (
    "extremal-cat",
    "scs",
    "scs-superposition",
    "fourier",
    "random-real",
    "random-complex",
    "explicit",
)

GS_DEPENDENCE_TOL = 1e-10


@dataclass(frozen=True)
class SCSParams:
    s: float
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        two_s = 2 * self.s
        if abs(two_s - round(two_s)) > 1e-12 or two_s < 0:
            raise InvalidParameterError(f"spin must be a nonnegative half-integer, got {self.s}")
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise InvalidParameterError("SCS angles must be finite")
        object.__setattr__(self, "s", round(two_s) / 2)

    @property
    def dimension(self) -> int:
        return int(round(2 * self.s)) + 1


def extremal_cat(lattice: Lattice, relative_phase: float = 0.0) -> WalkerState:
    """``(|n> + e^{i phi}|-n>)/sqrt2`` on the two extremal sites."""
    if lattice.dimension < 2:
        raise InvalidParameterError("an extremal cat needs at least two sites")
    a = np.zeros(lattice.dimension, dtype=complex)
    a[-1] = 1.0 / math.sqrt(2.0)
    a[0] = cmath.exp(1j * relative_phase) / math.sqrt(2.0)
    return WalkerState(lattice, a)


def scs_amplitudes(s: float, theta, phi) -> NDArray[np.complex128]:
    """
    Spin-coherent amplitudes ``<s_z|s, theta, phi>`` for ``s_z = -s..s`` (ascending).

    ``theta`` and ``phi`` broadcast; the result has shape ``broadcast + (2s + 1,)``.
    Uses ``C = cos(theta/2)``, ``S = sin(theta/2)`` so negative ``theta`` flips the
    sign of ``S``.
    """
    two_s = int(round(2 * s))
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    c = np.cos(theta / 2.0)[..., None]
    sn = np.sin(theta / 2.0)[..., None]
    up = np.arange(two_s + 1)  # s + s_z
    down = two_s - up  # s - s_z
    s_z = up - two_s / 2.0
    binom = np.array([math.comb(two_s, int(u)) for u in up], dtype=float)
    return np.sqrt(binom) * np.exp(-1j * phi[..., None] * s_z) * c**up * sn**down


def scs_state(params: SCSParams, oam_step: int = 1) -> WalkerState:
    """Spin-coherent state on a ``2s``-step walker lattice."""
    lattice = Lattice(params.dimension - 1, oam_step)
    return WalkerState.from_amplitudes(scs_amplitudes(params.s, params.theta, params.phi), lattice)


def scs_superposition(c1: complex, c2: complex, s1: WalkerState, s2: WalkerState) -> WalkerState:
    if s1.dimension != s2.dimension:
        raise DimensionMismatchError("superposed states live in different dimensions")
    a = c1 * s1.amplitudes + c2 * s2.amplitudes
    if np.linalg.norm(a) < 1e-12:
        raise ZeroVectorError("superposition cancels to zero")
    return WalkerState.from_amplitudes(a, s1.lattice)


_CAT_SIGNS = {"+": 1.0, "-": -1.0, "+i": 1j, "-i": -1j}


def scs_cat(sign: str = "+", s: float = 2.5) -> WalkerState:
    """``(|S1> + c |S2>)/sqrt2`` with ``S1 = |s, pi/2, 0>``, ``S2 = |s, -pi/2, 0>``."""
    if sign not in _CAT_SIGNS:
        raise InvalidParameterError(f"sign must be one of {sorted(_CAT_SIGNS)}, got {sign!r}")
    s1 = scs_state(SCSParams(s, math.pi / 2))
    s2 = scs_state(SCSParams(s, -math.pi / 2))
    return scs_superposition(1 / math.sqrt(2), _CAT_SIGNS[sign] / math.sqrt(2), s1, s2)


def fourier_state(k: int, d: int) -> WalkerState:
    """
    ``|QFT_k> = d^{-1/2} sum_{j=1}^{d} exp(2 pi i j k / d) |j>``.

    For ``d = 6`` the phase is ``exp(i pi j k / 3)``.
    """
    if d < 1:
        raise InvalidParameterError(f"dimension must be positive, got {d}")
    if not 1 <= k <= d:
        raise InvalidParameterError(f"Fourier index must lie in 1..{d}, got {k}")
    j = np.arange(1, d + 1)
    return WalkerState(Lattice(d - 1), np.exp(2j * np.pi * j * k / d) / math.sqrt(d))


def random_target(kind: str, d: int, seed: int) -> WalkerState:
    """
    Random target from ``numpy.random.default_rng(seed)`` (PCG64).

    ``real``: amplitudes uniform on [0, 1]. ``complex``: real parts drawn first,
    then imaginary parts, each uniform on [-0.5, 0.5]. Both are then normalized.
    """
    if d < 2:
        raise InvalidParameterError(f"random targets need d >= 2, got {d}")
    rng = np.random.default_rng(seed)
    if kind == "real":
        a = rng.uniform(0.0, 1.0, d).astype(complex)
    elif kind == "complex":
        re = rng.uniform(-0.5, 0.5, d)
        im = rng.uniform(-0.5, 0.5, d)
        a = re + 1j * im
    else:
        raise InvalidParameterError(f"random kind must be 'real' or 'complex', got {kind!r}")
    return WalkerState.from_amplitudes(a, Lattice(d - 1))


def explicit_target(amplitudes, oam_step: int = 1) -> WalkerState:
    """Renormalized copy of an explicit amplitude list (ascending sites)."""
    a = np.asarray(amplitudes, dtype=complex).ravel()
    if a.size < 1:
        raise InvalidParameterError("empty amplitude list")
    return WalkerState.from_amplitudes(a, Lattice(a.size - 1, oam_step))


def embed_full_lattice(amplitudes, n_steps: int, oam_step: int = 1) -> WalkerState:
    """
    Build a target from amplitudes over every site ``-n..n``.

    Weight on sites of the wrong parity can never be produced by an ``n``-step walk
    from the origin; it raises :class:`InfeasibleTargetError`.
    """
    a = np.asarray(amplitudes, dtype=complex).ravel()
    if a.size != 2 * n_steps + 1:
        raise DimensionMismatchError(f"expected {2 * n_steps + 1} amplitudes, got {a.size}")
    if np.linalg.norm(a[1::2]) > 1e-12:
        bad = [int(k) for k, x in zip(range(-n_steps, n_steps + 1), a) if abs(x) > 1e-12 and (k + n_steps) % 2]
        raise InfeasibleTargetError(f"target populates unreachable sites {bad}")
    return WalkerState.from_amplitudes(a[::2], Lattice(n_steps, oam_step))


def gram_schmidt_basis(target: WalkerState) -> list[WalkerState]:
    """
    Orthonormal basis whose first element is ``target`` itself.

    Computational basis vectors are added in ascending site order and
    orthogonalized against everything already kept; a vector whose residual norm
    falls below 1e-10 is skipped.
    """
    d = target.dimension
    kept = [np.array(target.amplitudes)]
    for idx in range(d):
        if len(kept) == d:
            break
        v = np.zeros(d, dtype=complex)
        v[idx] = 1.0
        for _ in range(2):  # re-orthogonalize once for stability
            for u in kept:
                v = v - np.vdot(u, v) * u
        nrm = np.linalg.norm(v)
        if nrm < GS_DEPENDENCE_TOL:
            continue
        kept.append(v / nrm)
    basis = [target] + [WalkerState(target.lattice, v) for v in kept[1:]]
    gram = np.array([b.amplitudes for b in basis])
    assert np.max(np.abs(gram.conj() @ gram.T - np.eye(d))) < STATE_TOL
    return basis


@dataclass(frozen=True)
class TargetSpec:
    """Declarative target description; ``params`` depends on ``kind``."""

    kind: str
    params: dict[str, Any] = field(default_factory=dict)
    n_steps: int = 5

    def __post_init__(self):
        if self.kind not in TARGET_KINDS:
            raise InvalidParameterError(f"unknown target kind {self.kind!r}")


def build_target(spec: TargetSpec, oam_step: int = 1) -> WalkerState:
    """Materialize a :class:`TargetSpec` on an ``n_steps`` lattice."""
    p = spec.params
    n = spec.n_steps
    d = n + 1
    if spec.kind == "extremal-cat":
        state = extremal_cat(Lattice(n), p.get("phi", 0.0))
    elif spec.kind == "scs":
        state = scs_state(SCSParams(p.get("s", n / 2), p["theta"], p.get("phi", 0.0)))
    elif spec.kind == "scs-superposition":
        state = scs_cat(p.get("sign", "+"), p.get("s", n / 2))
    elif spec.kind == "fourier":
        state = fourier_state(int(p["k"]), d)
    elif spec.kind in ("random-real", "random-complex"):
        state = random_target(spec.kind.split("-")[1], d, int(p["seed"]))
    else:
        amps = np.asarray(p["amplitudes"], dtype=complex)
        if amps.size == 2 * n + 1 and n > 0:
            return embed_full_lattice(amps, n, oam_step)
        state = explicit_target(amps)
    if state.dimension != d:
        raise DimensionMismatchError(
            f"{spec.kind} target has dimension {state.dimension}, a {n}-step walk needs {d}"
        )
    return WalkerState(Lattice(n, oam_step), state.amplitudes)


# Published amplitudes of the random states, ordered by ascending OAM
# (rounded to two decimals, hence renormalized on load).
TABLE2_AMPLITUDES: dict[str, tuple[complex, ...]] = {
    "r1": (0.51, 0.27, 0.13, 0.10, 0.29, 0.75),
    "r2": (0.19, 0.40, 0.04, 0.53, 0.37, 0.62),
    "r3": (0.50, 0.74, 0.40, 0.16, 0.10, 0.006),
    "r4": (0.50, 0.47, 0.55, 0.31, 0.36, 0.04),
    "r5": (0.24, 0.12, 0.72, 0.16, 0.54, 0.30),
    "c1": (0.04 + 0.35j, 0.34 + 0.41j, 0.10 + 0.42j, 0.18 - 0.26j, 0.11 - 0.11j, -0.47 + 0.22j),
    "c2": (0.19 - 0.33j, -0.43 + 0.30j, -0.18 - 0.02j, -0.37 + 0.42j, -0.12 - 0.10j, 0.23 + 0.38j),
    "c3": (-0.19 - 0.30j, -0.02 + 0.39j, 0.30 - 0.15j, 0.25 - 0.22j, -0.13 + 0.42j, 0.24 + 0.48j),
    "c4": (0.06 + 0.07j, 0.30 - 0.37j, -0.23 + 0.08j, 0.11 - 0.13j, -0.22 + 0.57j, 0.07 - 0.54j),
    "c5": (0.07 + 0.14j, 0.48 - 0.34j, -0.41 - 0.18j, -0.41 - 0.09j, -0.10 + 0.32j, 0.32 + 0.18j),
}


@dataclass(frozen=True)
class CatalogEntry:
    """One row of the 32-state benchmark, with the published reference values."""

    label: str
    grammar: str
    state: WalkerState
    reference_probability: float
    reference_fidelity: float

    @property
    def single_site(self) -> bool:
        return len(self.state.support(1e-12)) == 1

    @property
    def extremal_cat(self) -> bool:
        return self.state.support(1e-12) == [-5, 5]


def _amps_grammar(amps) -> str:
    def fmt(z: complex) -> str:
        z = complex(z)
        if z.imag == 0:
            return repr(z.real)
        return f"{z.real!r}{z.imag:+}i"

    return "amps:[" + ",".join(fmt(z) for z in amps) + "]"


def table1_catalog() -> list[CatalogEntry]:
    """The 32 benchmark targets of the 5-step experiment, in published row order."""
    lat = Lattice(5)
    rows: list[CatalogEntry] = []

    for k, fid in zip((-5, -3, -1, 1, 3, 5), (0.981, 0.982, 0.960, 0.995, 0.975, 0.994)):
        amps = np.zeros(6)
        amps[lat.index(k)] = 1.0
        rows.append(CatalogEntry(f"|{k}>", _amps_grammar(amps), WalkerState.basis(lat, k), 0.5, fid))

    # (|-5> + c|5>)/sqrt2 equals (|5> + conj(c)|-5>)/sqrt2 up to a global phase
    for label, phi, fid in (
        ("(|-5>+|5>)/sqrt2", 0.0, 0.995),
        ("(|-5>-|5>)/sqrt2", math.pi, 0.947),
        ("(|-5>+i|5>)/sqrt2", -math.pi / 2, 0.969),
        ("(|-5>-i|5>)/sqrt2", math.pi / 2, 0.936),
    ):
        rows.append(CatalogEntry(label, f"cat:phi={phi!r}", extremal_cat(lat, phi), 0.5, fid))

    rows.append(CatalogEntry("S1", f"scs:s=5/2,theta={math.pi / 2!r},phi=0",
                             scs_state(SCSParams(2.5, math.pi / 2)), 0.15, 0.970))
    rows.append(CatalogEntry("S2", f"scs:s=5/2,theta={-math.pi / 2!r},phi=0",
                             scs_state(SCSParams(2.5, -math.pi / 2)), 0.15, 0.961))
    for label, sign, prob, fid in (
        ("(S1+S2)/sqrt2", "+", 0.15, 0.932),
        ("(S1-S2)/sqrt2", "-", 0.15, 0.942),
        ("(S1-iS2)/sqrt2", "-i", 0.23, 0.974),
        ("(S1+iS2)/sqrt2", "+i", 0.23, 0.964),
    ):
        rows.append(CatalogEntry(label, f"scscat:sign={sign}", scs_cat(sign), prob, fid))

    for k, prob, fid in zip(range(1, 7), (0.14, 0.17, 0.17, 0.17, 0.17, 0.17),
                            (0.969, 0.923, 0.911, 0.980, 0.936, 0.945)):
        rows.append(CatalogEntry(f"QFT{k}", f"fourier:k={k}", fourier_state(k, 6), prob, fid))

    refs = {
        "r1": (0.22, 0.911), "r2": (0.16, 0.923), "r3": (0.17, 0.941), "r4": (0.14, 0.947),
        "r5": (0.19, 0.950), "c1": (0.16, 0.956), "c2": (0.29, 0.935), "c3": (0.17, 0.925),
        "c4": (0.16, 0.944), "c5": (0.28, 0.946),
    }
    for name, amps in TABLE2_AMPLITUDES.items():
        prob, fid = refs[name]
        rows.append(CatalogEntry(name, _amps_grammar(amps), explicit_target(amps), prob, fid))
    return rows
