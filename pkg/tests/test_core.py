import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quditwalk.core import (
    CoinKet,
    CoinParams,
    Lattice,
    WalkerCoinState,
    WalkerState,
    apply_coin,
    apply_shift,
    basis_probabilities,
    coin_matrix,
    estimate_fidelity_mc,
    evolve,
    fidelity,
    project_coin,
    simulate_counts,
)
from quditwalk.errors import (
    DimensionMismatchError,
    InvalidParameterError,
    NonOrthonormalBasisError,
    ZeroProbabilityError,
    ZeroVectorError,
)

angles = st.floats(-10.0, 10.0, allow_nan=False, allow_infinity=False)
coin_params = st.builds(CoinParams, angles, angles, angles)


def dense_walk_unitary(coins, n):
    """Full ``U = prod S C_t`` on sites -n..n (coin index fastest)."""
    m = 2 * n + 1
    shift = np.zeros((2 * m, 2 * m))
    for k in range(m):
        if k - 1 >= 0:
            shift[2 * (k - 1) + 0, 2 * k + 0] = 1
        if k + 1 < m:
            shift[2 * (k + 1) + 1, 2 * k + 1] = 1
    u = np.eye(2 * m, dtype=complex)
    for c in coins:
        u = shift @ np.kron(np.eye(m), coin_matrix(c)) @ u
    return u


def embed(state: WalkerCoinState, n: int) -> np.ndarray:
    pad = n - state.lattice.n_steps
    return np.pad(state.amplitudes, ((pad, pad), (0, 0))).ravel()


# ---------------------------------------------------------------- coins

def test_coin_identity():
    np.testing.assert_allclose(coin_matrix(CoinParams(0, 0, 0)), np.eye(2), atol=1e-15)


def test_coin_hadamard_like():
    r = math.sqrt(2) / 2
    np.testing.assert_allclose(coin_matrix(CoinParams(math.pi / 4, 0, 0)), [[r, r], [-r, r]], atol=1e-15)


def test_coin_symbolic_oracle():
    import sympy as sp

    th, xi, ze = sp.pi / 2, 0, sp.pi / 2
    m = sp.Matrix([[sp.exp(sp.I * xi) * sp.cos(th), sp.exp(sp.I * ze) * sp.sin(th)],
                   [-sp.exp(-sp.I * ze) * sp.sin(th), sp.exp(-sp.I * xi) * sp.cos(th)]])
    expected = np.array(m.evalf(), dtype=complex)
    np.testing.assert_allclose(expected, [[0, 1j], [1j, 0]], atol=1e-15)
    np.testing.assert_allclose(coin_matrix(CoinParams(math.pi / 2, 0, math.pi / 2)), expected, atol=1e-15)


@settings(max_examples=300, deadline=None)
@given(coin_params)
def test_coin_special_unitary(c):
    m = coin_matrix(c)
    np.testing.assert_allclose(m.conj().T @ m, np.eye(2), atol=1e-12)
    assert abs(np.linalg.det(m) - 1) < 1e-12


@settings(max_examples=300, deadline=None)
@given(angles, angles, angles)
def test_coin_normalization_keeps_matrix(th, xi, ze):
    c = CoinParams(th, xi, ze)
    assert 0 <= c.theta <= math.pi / 2
    assert -math.pi < c.xi <= math.pi and -math.pi < c.zeta <= math.pi
    raw = np.array([[np.exp(1j * xi) * np.cos(th), np.exp(1j * ze) * np.sin(th)],
                    [-np.exp(-1j * ze) * np.sin(th), np.exp(-1j * xi) * np.cos(th)]])
    # canonical form is the same operator up to a global sign
    m = coin_matrix(c)
    assert abs(abs(np.trace(m.conj().T @ raw)) / 2 - 1) < 1e-12


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_coin_rejects_nonfinite(bad):
    with pytest.raises(InvalidParameterError):
        CoinParams(bad, 0, 0)


# ---------------------------------------------------------------- lattice & states

def test_lattice_sites():
    lat = Lattice(5)
    assert lat.dimension == 6
    assert list(lat.sites) == [-5, -3, -1, 1, 3, 5]
    assert list(Lattice(2, oam_step=2).oam_values) == [-4, 0, 4]


def test_walker_state_normalizes_and_rejects_zero():
    s = WalkerState.from_amplitudes([3, 4j], Lattice(1))
    assert abs(np.linalg.norm(s.amplitudes) - 1) < 1e-15
    with pytest.raises(ZeroVectorError):
        WalkerState.from_amplitudes([0, 0], Lattice(1))


def test_shift_definitions():
    lat = Lattice(0)
    up = apply_shift(WalkerCoinState.basis(lat, 0, 1))
    down = apply_shift(WalkerCoinState.basis(lat, 0, 0))
    assert up.amplitude(1, 1) == 1 and np.count_nonzero(up.amplitudes) == 1
    assert down.amplitude(-1, 0) == 1 and np.count_nonzero(down.amplitudes) == 1
    plus = apply_shift(WalkerCoinState.initial())
    r = 1 / math.sqrt(2)
    assert abs(plus.amplitude(-1, 0) - r) < 1e-15 and abs(plus.amplitude(1, 1) - r) < 1e-15


def test_apply_coin_hadamard_on_up():
    s = apply_coin(WalkerCoinState.basis(Lattice(0), 0, 1), CoinParams(math.pi / 4, 0, 0))
    r = math.sqrt(2) / 2
    # column 1 of the coin matrix: (sin, cos) = (r, r)
    np.testing.assert_allclose(s.amplitudes[0], [r, r], atol=1e-15)


def test_one_step_identity_coin():
    s = evolve(WalkerCoinState.basis(Lattice(0), 0, 1), [CoinParams(0, 0, 0)])
    assert s.amplitude(1, 1) == pytest.approx(1)


def test_two_step_hand_expansion():
    # |0,up> -H-> (|d> + |u>)/sqrt2 -S-> (|-1,d> + |1,u>)/sqrt2
    # -H-> (|-1,d> - |-1,u> + |1,d> + |1,u>)/2 -S-> (|-2,d> - |0,u> + |0,d> + |2,u>)/2
    s = evolve(WalkerCoinState.basis(Lattice(0), 0, 1), [CoinParams(math.pi / 4, 0, 0)] * 2)
    expected = np.zeros((5, 2))
    expected[0, 0], expected[2, 1], expected[2, 0], expected[4, 1] = 0.5, -0.5, 0.5, 0.5
    np.testing.assert_allclose(s.amplitudes, expected, atol=1e-15)


def test_evolve_requires_coins():
    with pytest.raises(InvalidParameterError):
        evolve(WalkerCoinState.initial(), [])


def test_five_step_support():
    rng = np.random.default_rng(3)
    coins = [CoinParams(*rng.uniform(-3, 3, 3)) for _ in range(5)]
    s = evolve(WalkerCoinState.initial(), coins)
    occupied = {int(k) for k, row in zip(s.lattice.all_sites, s.amplitudes) if np.any(row != 0)}
    assert occupied <= {-5, -3, -1, 1, 3, 5}


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_dense_oracle_equivalence(n):
    rng = np.random.default_rng(n)
    for _ in range(25):
        coins = [CoinParams(*rng.uniform(-math.pi, math.pi, 3)) for _ in range(n)]
        init = WalkerCoinState.initial()
        got = embed(evolve(init, coins), n)
        want = dense_walk_unitary(coins, n) @ embed(init, n)
        assert np.max(np.abs(got - want)) < 1e-10


@settings(max_examples=1000, deadline=None)
@given(st.lists(coin_params, min_size=1, max_size=8))
def test_norm_and_parity_invariants(coins):
    s = evolve(WalkerCoinState.initial(), coins)
    t = len(coins)
    assert abs(np.linalg.norm(s.amplitudes) - 1) < 1e-10
    # off-parity rows are exactly zero
    assert np.all(s.amplitudes[1::2] == 0)
    assert s.lattice.n_steps == t


# ---------------------------------------------------------------- projection & fidelity

def test_project_examples():
    w, p = project_coin(WalkerCoinState.initial(), CoinKet.plus())
    assert p == pytest.approx(1) and w.amplitudes[0] == pytest.approx(1)
    w, p = project_coin(WalkerCoinState.basis(Lattice(0), 0, 1), CoinKet.plus())
    assert p == pytest.approx(0.5)


def test_project_zero_probability():
    with pytest.raises(ZeroProbabilityError):
        project_coin(WalkerCoinState.basis(Lattice(0), 0, 1), CoinKet.down())


@settings(max_examples=200, deadline=None)
@given(st.lists(coin_params, min_size=1, max_size=6), angles, angles)
def test_projection_completeness(coins, a, b):
    s = evolve(WalkerCoinState.initial(), coins)
    ket = np.array([math.cos(a), math.sin(a) * np.exp(1j * b)])
    perp = np.array([-np.conj(ket[1]), np.conj(ket[0])])
    total = 0.0
    for k in (ket, perp):
        try:
            total += project_coin(s, CoinKet(k))[1]
        except ZeroProbabilityError:
            pass
    assert abs(total - 1) < 1e-12


def test_fidelity_examples():
    lat = Lattice(5)
    five, mfive = WalkerState.basis(lat, 5), WalkerState.basis(lat, -5)
    cat = WalkerState.from_amplitudes(five.amplitudes + mfive.amplitudes, lat)
    assert fidelity(five, five) == pytest.approx(1)
    assert fidelity(five, mfive) == 0
    assert fidelity(five, cat) == pytest.approx(0.5)
    with pytest.raises(DimensionMismatchError):
        fidelity(five, WalkerState.basis(Lattice(3), 1))


# ---------------------------------------------------------------- counts

def _basis(d):
    lat = Lattice(d - 1)
    return [WalkerState.basis(lat, int(k)) for k in lat.sites]


def test_counts_all_in_target_bucket():
    b = _basis(6)
    c = simulate_counts(b[0], b, 1000, seed=1)
    assert c[0] == 1000 and c.sum() == 1000


def test_counts_deterministic_and_partial_sink():
    b = _basis(4)
    state = WalkerState.from_amplitudes([1, 1, 1, 1], b[0].lattice)
    assert np.array_equal(simulate_counts(state, b, 500, 7), simulate_counts(state, b, 500, 7))
    c = simulate_counts(state, b[:2], 4000, 3)
    assert c.size == 3 and c.sum() == 4000


def test_counts_law_of_large_numbers():
    b = _basis(6)
    amps = np.arange(1, 7, dtype=float)
    state = WalkerState.from_amplitudes(amps, b[0].lattice)
    p = amps**2 / np.sum(amps**2)
    shots = 200_000
    c = simulate_counts(state, b, shots, seed=11)
    assert np.all(np.abs(c / shots - p) < 3 * np.sqrt(p * (1 - p) / shots) + 1e-12)


def test_non_orthonormal_basis_rejected():
    lat = Lattice(1)
    b = [WalkerState.basis(lat, -1), WalkerState.from_amplitudes([1, 1], lat)]
    with pytest.raises(NonOrthonormalBasisError):
        basis_probabilities(b[0], b)


def test_mc_estimate_examples():
    f, sigma = estimate_fidelity_mc([1000, 0, 0], resamples=500, seed=0)
    assert f == 1 and sigma == 0
    with pytest.raises(ZeroProbabilityError):
        estimate_fidelity_mc([0, 0])


def test_mc_estimate_matches_analytic():
    b = _basis(6)
    state = WalkerState.from_amplitudes([2, 1, 1, 0, 1, 1], b[0].lattice)
    p0 = 4 / 8
    c = simulate_counts(state, b, 10_000, seed=5)
    f, sigma = estimate_fidelity_mc(c, 0, 1000, seed=5)
    assert abs(f - p0) < 3 * sigma


def test_mc_sigma_scaling():
    p = np.array([0.6, 0.3, 0.1])
    s1 = estimate_fidelity_mc(np.round(p * 20_000), resamples=4000, seed=1)[1]
    s2 = estimate_fidelity_mc(np.round(p * 40_000), resamples=4000, seed=2)[1]
    assert s2 / s1 == pytest.approx(1 / math.sqrt(2), rel=0.2)
