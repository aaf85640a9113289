"""
Exact state-vector simulation of a coined discrete-time quantum walk on a line.

Conventions
-----------
* Coin basis is ordered ``(down, up)``: index 0 is ``|down>``, index 1 is ``|up>``.
  The shift moves ``down`` one site left and ``up`` one site right.
* A walk step applies the coin first, then the shift.
* A :class:`WalkerCoinState` stores a dense ``(2n + 1, 2)`` array over the sites
  ``-n, ..., n``. A walk started at site 0 only ever populates the sites whose
  parity matches the step count; :class:`WalkerState` keeps just those ``n + 1``
  sites, ordered from the most negative one upwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import (
    DimensionMismatchError,
    InvalidParameterError,
    NonOrthonormalBasisError,
    ZeroProbabilityError,
    ZeroVectorError,
)

__all__ = [
    "STATE_TOL",
    "MATRIX_TOL",
    "ZERO_PROBABILITY",
    "CoinParams",
    "Lattice",
    "WalkerCoinState",
    "WalkerState",
    "CoinKet",
    "coin_matrix",
    "coin_matrices",
    "apply_coin",
    "apply_coin_matrix",
    "apply_shift",
    "evolve",
    "project_coin",
    "fidelity",
    "basis_probabilities",
    "simulate_counts",
    "estimate_fidelity_mc",
]

STATE_TOL = 1e-10
MATRIX_TOL = 1e-12
ZERO_PROBABILITY = 1e-14

DOWN, UP = 0, 1


def wrap_angle(x: float) -> float:
    """Map an angle into (-pi, pi]."""
    r = math.remainder(x, 2.0 * math.pi)
    return math.pi if r <= -math.pi else r


def _frozen(a: NDArray) -> NDArray:
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CoinParams:
    """
    Angles ``(theta, xi, zeta)`` of one SU(2) coin.

    Any finite input is accepted and rewritten into the canonical ranges
    ``theta in [0, pi/2]`` and ``xi, zeta in (-pi, pi]`` without changing the
    matrix returned by :func:`coin_matrix`.
    """

    theta: float
    xi: float = 0.0
    zeta: float = 0.0

    def __post_init__(self):
        vals = (self.theta, self.xi, self.zeta)
        if not all(math.isfinite(float(v)) for v in vals):
            raise InvalidParameterError(f"coin angles must be finite, got {vals}")
        c, s = math.cos(self.theta), math.sin(self.theta)
        xi = float(self.xi) + (math.pi if c < 0 else 0.0)
        zeta = float(self.zeta) + (math.pi if s < 0 else 0.0)
        object.__setattr__(self, "theta", math.atan2(abs(s), abs(c)))
        object.__setattr__(self, "xi", wrap_angle(xi))
        object.__setattr__(self, "zeta", wrap_angle(zeta))

    @classmethod
    def from_matrix(cls, m: NDArray) -> "CoinParams":
        """Recover the angles of a special-unitary 2x2 matrix."""
        m = np.asarray(m, dtype=complex)
        theta = math.atan2(abs(m[0, 1]), abs(m[0, 0]))
        xi = float(np.angle(m[0, 0])) if abs(m[0, 0]) > 0 else 0.0
        zeta = float(np.angle(m[0, 1])) if abs(m[0, 1]) > 0 else 0.0
        return cls(theta, xi, zeta)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.theta, self.xi, self.zeta)


def coin_matrix(params: CoinParams) -> NDArray[np.complex128]:
    """``[[e^{i xi} cos t, e^{i zeta} sin t], [-e^{-i zeta} sin t, e^{-i xi} cos t]]``."""
    if not isinstance(params, CoinParams):
        params = CoinParams(*params)
    return coin_matrices(np.array(params.as_tuple()))


def coin_matrices(angles: NDArray) -> NDArray[np.complex128]:
    """Vectorized :func:`coin_matrix` over a trailing axis of length 3.

    Input is not normalized or validated; shape ``(..., 3)`` maps to ``(..., 2, 2)``.
    """
    angles = np.asarray(angles, dtype=float)
    theta, xi, zeta = angles[..., 0], angles[..., 1], angles[..., 2]
    c, s = np.cos(theta), np.sin(theta)
    ex, ez = np.exp(1j * xi), np.exp(1j * zeta)
    out = np.empty(angles.shape[:-1] + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = ex * c
    out[..., 0, 1] = ez * s
    out[..., 1, 0] = -np.conj(ez) * s
    out[..., 1, 1] = np.conj(ex) * c
    return out


@dataclass(frozen=True)
class Lattice:
    """Sites ``-n_steps, ..., n_steps``; site ``k`` carries OAM ``k * oam_step``."""

    n_steps: int
    oam_step: int = 1

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise InvalidParameterError(f"n_steps must be a nonnegative integer, got {self.n_steps}")
        if int(self.oam_step) != self.oam_step or self.oam_step == 0:
            raise InvalidParameterError(f"oam_step must be a nonzero integer, got {self.oam_step}")

    @property
    def dimension(self) -> int:
        return self.n_steps + 1

    @property
    def all_sites(self) -> NDArray[np.int64]:
        return np.arange(-self.n_steps, self.n_steps + 1)

    @property
    def sites(self) -> NDArray[np.int64]:
        """Reachable sites ``-n, -n+2, ..., n`` (the qudit levels)."""
        return np.arange(-self.n_steps, self.n_steps + 1, 2)

    @property
    def oam_values(self) -> NDArray[np.int64]:
        return self.sites * self.oam_step

    def index(self, site: int) -> int:
        """Position of ``site`` inside :attr:`sites`."""
        if abs(site) > self.n_steps or (site + self.n_steps) % 2:
            raise InvalidParameterError(f"site {site} is not reachable on {self}")
        return (site + self.n_steps) // 2

    def grown(self, by: int = 1) -> "Lattice":
        return Lattice(self.n_steps + by, self.oam_step)


@dataclass(frozen=True)
class CoinKet:
    amplitudes: NDArray[np.complex128]

    def __post_init__(self):
        a = _frozen(self.amplitudes)
        if a.shape != (2,):
            raise DimensionMismatchError(f"coin ket needs 2 amplitudes, got shape {a.shape}")
        if abs(np.linalg.norm(a) - 1.0) > MATRIX_TOL:
            raise InvalidParameterError(f"coin ket must have unit norm, got {np.linalg.norm(a)!r}")
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def plus(cls) -> "CoinKet":
        return cls(np.array([1.0, 1.0]) / math.sqrt(2.0))

    @classmethod
    def minus(cls) -> "CoinKet":
        # |+> = (|up> + |down>)/sqrt2, so |-> = (|up> - |down>)/sqrt2
        return cls(np.array([-1.0, 1.0]) / math.sqrt(2.0))

    @classmethod
    def up(cls) -> "CoinKet":
        return cls(np.array([0.0, 1.0]))

    @classmethod
    def down(cls) -> "CoinKet":
        return cls(np.array([1.0, 0.0]))


@dataclass(frozen=True)
class WalkerCoinState:
    """Joint walker-coin amplitudes, shape ``(2 n + 1, 2)`` over sites ``-n..n``."""

    lattice: Lattice
    amplitudes: NDArray[np.complex128]
    normalized: bool = field(default=True, compare=False)

    def __post_init__(self):
        a = _frozen(self.amplitudes)
        expected = (2 * self.lattice.n_steps + 1, 2)
        if a.shape != expected:
            raise DimensionMismatchError(f"amplitudes shape {a.shape} != {expected} for {self.lattice}")
        if self.normalized and abs(np.vdot(a, a).real - 1.0) > STATE_TOL:
            raise InvalidParameterError("walker-coin state is not normalized")
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def initial(cls, coin: CoinKet | None = None, oam_step: int = 1) -> "WalkerCoinState":
        """``|0>_w (x) |coin>``; defaults to ``|+>``."""
        coin = coin or CoinKet.plus()
        return cls(Lattice(0, oam_step), coin.amplitudes.reshape(1, 2))

    @classmethod
    def basis(cls, lattice: Lattice, site: int, coin: int) -> "WalkerCoinState":
        a = np.zeros((2 * lattice.n_steps + 1, 2), dtype=complex)
        a[site + lattice.n_steps, coin] = 1.0
        return cls(lattice, a)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, site: int, coin: int) -> complex:
        return complex(self.amplitudes[site + self.lattice.n_steps, coin])


@dataclass(frozen=True)
class WalkerState:
    """Normalized qudit amplitudes over ``lattice.sites`` (ascending)."""

    lattice: Lattice
    amplitudes: NDArray[np.complex128]

    def __post_init__(self):
        a = _frozen(self.amplitudes)
        if a.shape != (self.lattice.dimension,):
            raise DimensionMismatchError(
                f"walker state needs {self.lattice.dimension} amplitudes, got shape {a.shape}"
            )
        if abs(np.vdot(a, a).real - 1.0) > STATE_TOL:
            raise InvalidParameterError("walker state is not normalized")
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def from_amplitudes(cls, amplitudes, lattice: Lattice | None = None) -> "WalkerState":
        """Normalize ``amplitudes`` (ordered by ascending site) into a state."""
        a = np.asarray(amplitudes, dtype=complex)
        nrm = np.linalg.norm(a)
        if nrm < 1e-12:
            raise ZeroVectorError("cannot normalize a zero amplitude vector")
        lattice = lattice or Lattice(a.size - 1)
        return cls(lattice, a / nrm)

    @classmethod
    def basis(cls, lattice: Lattice, site: int) -> "WalkerState":
        a = np.zeros(lattice.dimension, dtype=complex)
        a[lattice.index(site)] = 1.0
        return cls(lattice, a)

    @property
    def dimension(self) -> int:
        return self.lattice.dimension

    def amplitude(self, site: int) -> complex:
        return complex(self.amplitudes[self.lattice.index(site)])

    def support(self, tol: float = 1e-14) -> list[int]:
        return [int(k) for k, a in zip(self.lattice.sites, self.amplitudes) if abs(a) > tol]


def apply_coin_matrix(state: WalkerCoinState, matrix: NDArray) -> WalkerCoinState:
    """Apply the same 2x2 coin operator at every site."""
    return WalkerCoinState(state.lattice, state.amplitudes @ np.asarray(matrix).T, state.normalized)


def apply_coin(state: WalkerCoinState, params: CoinParams) -> WalkerCoinState:
    return apply_coin_matrix(state, coin_matrix(params))


def apply_shift(state: WalkerCoinState) -> WalkerCoinState:
    """``(k, down) -> (k-1, down)`` and ``(k, up) -> (k+1, up)``; the lattice grows by one."""
    old = state.amplitudes
    new = np.zeros((old.shape[0] + 2, 2), dtype=complex)
    new[:-2, DOWN] = old[:, DOWN]
    new[2:, UP] = old[:, UP]
    return WalkerCoinState(state.lattice.grown(), new, state.normalized)


def evolve(initial: WalkerCoinState, coins: Sequence[CoinParams]) -> WalkerCoinState:
    """Run ``len(coins)`` walk steps, each one coin then one shift."""
    if len(coins) == 0:
        raise InvalidParameterError("evolve needs at least one coin")
    state = initial
    for c in coins:
        state = apply_shift(apply_coin(state, c))
    return state


def project_coin(state: WalkerCoinState, ket: CoinKet | None = None) -> tuple[WalkerState, float]:
    """
    Post-select the coin on ``ket``.

    Returns the renormalized walker state on the reachable sites and the success
    probability. Raises :class:`ZeroProbabilityError` below ``1e-14``.
    """
    ket = ket or CoinKet.plus()
    proj = state.amplitudes @ np.conj(ket.amplitudes)
    p = float(np.vdot(proj, proj).real)
    if p < ZERO_PROBABILITY:
        raise ZeroProbabilityError(f"post-selection probability {p:.3e} is zero")
    on_parity = proj[::2]
    off = proj[1::2]
    if np.vdot(off, off).real > STATE_TOL * max(p, 1.0):
        raise DimensionMismatchError("projected state has support off the reachable sublattice")
    return WalkerState(state.lattice, on_parity / math.sqrt(p)), min(p, 1.0)


def _check_same(a: WalkerState, b: WalkerState):
    if a.dimension != b.dimension:
        raise DimensionMismatchError(f"dimensions differ: {a.dimension} vs {b.dimension}")


def fidelity(a: WalkerState, b: WalkerState) -> float:
    """``|<a|b>|^2`` for two pure walker states."""
    _check_same(a, b)
    return min(float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2), 1.0)


def basis_probabilities(state: WalkerState, basis: Sequence[WalkerState]) -> NDArray[np.float64]:
    """
    Outcome probabilities ``|<B_i|state>|^2``.

    A trailing sink entry holds the leftover probability when ``basis`` does not
    span the whole space.
    """
    for b in basis:
        _check_same(state, b)
    mat = np.array([b.amplitudes for b in basis])
    gram = mat.conj() @ mat.T
    if np.max(np.abs(gram - np.eye(len(basis)))) > STATE_TOL:
        raise NonOrthonormalBasisError("measurement basis is not orthonormal within 1e-10")
    probs = np.abs(mat.conj() @ state.amplitudes) ** 2
    if len(basis) < state.dimension:
        probs = np.append(probs, max(0.0, 1.0 - probs.sum()))
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def simulate_counts(
    state: WalkerState,
    basis: Sequence[WalkerState],
    shots: int,
    seed: int,
) -> NDArray[np.int64]:
    """Multinomial detection counts over ``basis`` (plus sink bucket if partial)."""
    if shots < 1:
        raise InvalidParameterError(f"shots must be positive, got {shots}")
    probs = basis_probabilities(state, basis)
    rng = np.random.default_rng(seed)
    return rng.multinomial(shots, probs)


def estimate_fidelity_mc(
    counts,
    target_index: int = 0,
    resamples: int = 1000,
    seed: int = 0,
) -> tuple[float, float]:
    """
    Point estimate and Monte Carlo uncertainty of a basis-projection fidelity.

    The estimate is the fraction of counts in the target bucket. Its uncertainty is
    the standard deviation of the same ratio over ``resamples`` count vectors in
    which every bucket is redrawn from a Poisson law with the observed mean.
    """
    counts = np.asarray(counts)
    if np.any(counts < 0):
        raise InvalidParameterError("counts must be nonnegative")
    total = counts.sum()
    if total <= 0:
        raise ZeroProbabilityError("no counts recorded")
    f_hat = counts[target_index] / total
    rng = np.random.default_rng(seed)
    sample = rng.poisson(counts, size=(resamples, counts.size))
    totals = sample.sum(axis=1)
    ok = totals > 0
    ratios = sample[ok, target_index] / totals[ok]
    sigma = float(np.std(ratios, ddof=1)) if ratios.size > 1 else 0.0
    return float(f_hat), sigma
