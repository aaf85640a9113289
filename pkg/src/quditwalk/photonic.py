"""
Optical realization of the walk: waveplates for coins, Q-plates for shifts.

Jones convention
----------------
A retarder of retardance ``Gamma`` with fast axis at angle ``a`` (from the
horizontal) has the linear-basis Jones matrix
``R(-a) diag(exp(-i Gamma/2), exp(i Gamma/2)) R(a)`` with
``R(a) = [[cos a, sin a], [-sin a, cos a]]``. Circular states are
``|R> = (|H> - i|V>)/sqrt2`` and ``|L> = (|H> + i|V>)/sqrt2``, and the coin is
encoded as ``L = up``, ``R = down``. In the coin basis ``(down, up) = (R, L)``
the retarder becomes ``Rz(-2a) Rx(Gamma) Rz(2a)`` with
``Rz(p) = diag(exp(-i p/2), exp(i p/2))`` and ``Rx(p) = exp(-i p sigma_x / 2)``,
so every waveplate is special unitary and ``QWP(a) @ QWP(a) == HWP(a)`` exactly.

A Q-plate tuned to ``delta = pi`` sends ``|L, m> -> i e^{2 i alpha0} |R, m + 2q>``
and ``|R, m> -> i e^{-2 i alpha0} |L, m - 2q>``. That is the ideal shift followed
by a coin-only operator ``G = [[0, i e^{2 i alpha0}], [i e^{-2 i alpha0}, 0]]``.
The compiler cancels ``G`` inside the next step's waveplates, and a last
waveplate stack cancels the final one before the projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .core import (
    MATRIX_TOL,
    CoinKet,
    CoinParams,
    WalkerCoinState,
    WalkerState,
    apply_coin_matrix,
    coin_matrix,
    project_coin,
)
from .errors import InvalidParameterError, UnsupportedConfigurationError

__all__ = [
    "WaveplateSetting",
    "QPlateParams",
    "PhysicalStep",
    "PhysicalCircuit",
    "jones_qwp",
    "jones_hwp",
    "jones_matrix",
    "stack_matrix",
    "decompose_coin",
    "reconstruction_metric",
    "apply_qplate",
    "qplate_unitary",
    "qplate_coin_factor",
    "compile_walk",
    "simulate_physical",
    "circuit_table",
    "circuit_to_dict",
]

_LIN_TO_COIN = np.array([[1, 1], [-1j, 1j]]) / math.sqrt(2)  # columns: |R>, |L>


def _rot(a: float) -> NDArray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, s], [-s, c]])


def _retarder(angle: float, retardance: float) -> NDArray[np.complex128]:
    if not math.isfinite(angle):
        raise InvalidParameterError(f"waveplate angle must be finite, got {angle}")
    lin = _rot(-angle) @ np.diag([np.exp(-0.5j * retardance), np.exp(0.5j * retardance)]) @ _rot(angle)
    return _LIN_TO_COIN.conj().T @ lin @ _LIN_TO_COIN


def jones_qwp(angle: float) -> NDArray[np.complex128]:
    """Quarter-wave plate in the coin basis ``(R, L)``."""
    return _retarder(angle, math.pi / 2)


def jones_hwp(angle: float) -> NDArray[np.complex128]:
    """Half-wave plate in the coin basis ``(R, L)``."""
    return _retarder(angle, math.pi)


@dataclass(frozen=True)
class WaveplateSetting:
    kind: str
    angle: float

    def __post_init__(self):
        if self.kind not in ("QWP", "HWP"):
            raise InvalidParameterError(f"waveplate kind must be QWP or HWP, got {self.kind!r}")
        if not math.isfinite(self.angle):
            raise InvalidParameterError("waveplate angle must be finite")
        # a retarder rotated by pi is the same element
        angle = float(self.angle) % math.pi
        # tiny negative inputs round up to exactly pi
        object.__setattr__(self, "angle", 0.0 if angle == math.pi else angle)


def jones_matrix(plate: WaveplateSetting) -> NDArray[np.complex128]:
    return jones_qwp(plate.angle) if plate.kind == "QWP" else jones_hwp(plate.angle)


def stack_matrix(plates: Sequence[WaveplateSetting]) -> NDArray[np.complex128]:
    """Jones matrix of plates traversed in list order (first plate acts first)."""
    m = np.eye(2, dtype=complex)
    for p in plates:
        m = jones_matrix(p) @ m
    return m


def reconstruction_metric(realized: NDArray, wanted: NDArray) -> float:
    """``|tr(W^dagger C)| / 2``; equals 1 iff the two agree up to a global phase."""
    return float(abs(np.trace(np.conj(realized).T @ wanted)) / 2)


def decompose_coin(coin: NDArray) -> list[WaveplateSetting]:
    """
    QWP-HWP-QWP stack reproducing ``coin`` up to a global phase.

    With ``coin ~ Rz(A) Ry(B) Rz(C)`` the product ``QWP(a) HWP(b) QWP(c)`` equals
    ``-Rz(-2a) Ry(4b - 2a - 2c) Rz(2c)``, which fixes ``a = -A/2``, ``c = C/2`` and
    ``b = (B - A + C)/4``. The returned list is in traversal order.
    """
    u = np.asarray(coin, dtype=complex)
    if u.shape != (2, 2) or np.max(np.abs(u.conj().T @ u - np.eye(2))) > 1e-9:
        raise InvalidParameterError("coin must be a 2x2 unitary")
    v = u / np.sqrt(np.linalg.det(u))
    # v = [[e^{-i(A+C)/2} cos(B/2), -e^{-i(A-C)/2} sin(B/2)],
    #      [e^{ i(A-C)/2} sin(B/2),  e^{ i(A+C)/2} cos(B/2)]]
    b_half = math.atan2(abs(v[1, 0]), abs(v[0, 0]))
    s_sum = float(np.angle(v[1, 1])) if abs(v[1, 1]) > 1e-14 else 0.0  # (A + C)/2
    s_dif = float(np.angle(v[1, 0])) if abs(v[1, 0]) > 1e-14 else 0.0  # (A - C)/2
    a_ang, c_ang = s_sum + s_dif, s_sum - s_dif
    plates = [
        WaveplateSetting("QWP", c_ang / 2),
        WaveplateSetting("HWP", (2 * b_half - a_ang + c_ang) / 4),
        WaveplateSetting("QWP", -a_ang / 2),
    ]
    if reconstruction_metric(stack_matrix(plates), u) < 1 - 1e-9:
        # sqrt(det) picked the other sign: B -> B + 2 pi flips the overall sign only
        plates[1] = WaveplateSetting("HWP", plates[1].angle + math.pi / 2)
    return plates


@dataclass(frozen=True)
class QPlateParams:
    delta: float = math.pi
    alpha0: float = -math.pi / 4
    q: float = 0.5

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.delta, self.alpha0, self.q)):
            raise InvalidParameterError("Q-plate parameters must be finite")
        if abs(2 * self.q - round(2 * self.q)) > 1e-12:
            raise InvalidParameterError(f"topological charge must be a half-integer, got {self.q}")


def _site_shift(params: QPlateParams, oam_step: int) -> int:
    two_q = round(2 * params.q)
    if two_q % oam_step:
        raise UnsupportedConfigurationError(f"OAM change 2q={two_q} is not a multiple of the lattice step {oam_step}")
    return two_q // oam_step


def apply_qplate(state: WalkerCoinState, params: QPlateParams) -> WalkerCoinState:
    """Q-plate action on every ``(coin, m)`` component; the lattice grows by ``|2q|`` sites."""
    shift = _site_shift(params, state.lattice.oam_step)
    g = abs(shift)
    old = state.amplitudes
    m = old.shape[0]
    new = np.zeros((m + 2 * g, 2), dtype=complex)
    c, s = math.cos(params.delta / 2), math.sin(params.delta / 2)
    to_r = 1j * np.exp(2j * params.alpha0) * s  # L -> R, m + 2q
    to_l = 1j * np.exp(-2j * params.alpha0) * s  # R -> L, m - 2q
    new[g:g + m, :] = c * old
    new[g + shift:g + shift + m, 0] += to_r * old[:, 1]
    new[g - shift:g - shift + m, 1] += to_l * old[:, 0]
    return WalkerCoinState(state.lattice.grown(g), new, state.normalized)


def qplate_unitary(params: QPlateParams):
    """The Q-plate as a callable on :class:`WalkerCoinState`."""
    return lambda state: apply_qplate(state, params)


def qplate_coin_factor(params: QPlateParams) -> NDArray[np.complex128]:
    """Coin-only factor ``G`` with ``QP = G . S`` at ``delta = pi``."""
    return np.array([
        [0, 1j * np.exp(2j * params.alpha0)],
        [1j * np.exp(-2j * params.alpha0), 0],
    ])


@dataclass(frozen=True)
class PhysicalStep:
    waveplates: tuple[WaveplateSetting, ...]
    qplate: QPlateParams


@dataclass(frozen=True)
class PhysicalCircuit:
    steps: tuple[PhysicalStep, ...]
    compensation: tuple[WaveplateSetting, ...]
    projection: CoinKet

    @property
    def n_steps(self) -> int:
        return len(self.steps)


def compile_walk(
    coins: Sequence[CoinParams],
    qplate: QPlateParams | Sequence[QPlateParams] | None = None,
    oam_step: int = 1,
    projection: CoinKet | None = None,
) -> PhysicalCircuit:
    """
    Waveplate and Q-plate settings realizing the ideal walk with ``coins``.

    ``qplate`` is one setting shared by every step or one per step. Step ``t``
    realizes ``C_t G_{t-1}^{-1}``; a trailing stack realizes ``G_n^{-1}``.
    """
    if qplate is None:
        qplate = QPlateParams()
    plates = [qplate] * len(coins) if isinstance(qplate, QPlateParams) else list(qplate)
    if len(plates) != len(coins):
        raise InvalidParameterError(f"{len(plates)} Q-plates for {len(coins)} steps")
    for qp in plates:
        if abs(math.remainder(qp.delta - math.pi, 2 * math.pi)) > 1e-12:
            raise UnsupportedConfigurationError(f"compiler needs full conversion delta = pi, got {qp.delta}")
        if _site_shift(qp, oam_step) != 1:
            raise UnsupportedConfigurationError(f"compiler needs 2q = oam_step = {oam_step}, got q = {qp.q}")

    steps = []
    undo = np.eye(2, dtype=complex)
    for coin, qp in zip(coins, plates):
        wanted = coin_matrix(coin) @ undo
        steps.append(PhysicalStep(tuple(decompose_coin(wanted)), qp))
        undo = np.conj(qplate_coin_factor(qp)).T
    return PhysicalCircuit(tuple(steps), tuple(decompose_coin(undo)), projection or CoinKet.plus())


def simulate_physical(
    circuit: PhysicalCircuit,
    initial: WalkerCoinState | None = None,
) -> tuple[WalkerState, float]:
    """Propagate through the optical cascade, then post-select the coin."""
    state = initial or WalkerCoinState.initial()
    for step in circuit.steps:
        if step.waveplates:
            state = apply_coin_matrix(state, stack_matrix(step.waveplates))
        state = apply_qplate(state, step.qplate)
    if circuit.compensation:
        state = apply_coin_matrix(state, stack_matrix(circuit.compensation))
    return project_coin(state, circuit.projection)


def circuit_to_dict(circuit: PhysicalCircuit) -> list[dict]:
    """Ordered element list; the compensation stack is reported as step ``n + 1``."""
    rows = []
    for t, step in enumerate(circuit.steps, start=1):
        rows += [{"step": t, "element": p.kind, "angle": p.angle} for p in step.waveplates]
        qp = step.qplate
        rows.append({"step": t, "element": "QPLATE", "delta": qp.delta, "alpha0": qp.alpha0, "q": qp.q})
    rows += [{"step": len(circuit.steps) + 1, "element": p.kind, "angle": p.angle} for p in circuit.compensation]
    return rows


def circuit_table(circuit: PhysicalCircuit) -> str:
    """Line-oriented, tab-separated rendering of :func:`circuit_to_dict` (radians)."""
    lines = ["step\telement\tangle\tdelta\talpha0\tq"]
    for r in circuit_to_dict(circuit):
        if r["element"] == "QPLATE":
            lines.append(f"{r['step']}\tQPLATE\t\t{r['delta']!r}\t{r['alpha0']!r}\t{r['q']!r}")
        else:
            lines.append(f"{r['step']}\t{r['element']}\t{r['angle']!r}\t\t\t")
    return "\n".join(lines) + "\n"
