import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from quditwalk.core import (
    CoinKet,
    CoinParams,
    Lattice,
    WalkerCoinState,
    apply_coin_matrix,
    coin_matrix,
    evolve,
    fidelity,
    project_coin,
)
from quditwalk.errors import InvalidParameterError, UnsupportedConfigurationError
from quditwalk.photonic import (
    PhysicalCircuit,
    PhysicalStep,
    QPlateParams,
    WaveplateSetting,
    apply_qplate,
    circuit_table,
    circuit_to_dict,
    compile_walk,
    decompose_coin,
    jones_hwp,
    jones_qwp,
    qplate_unitary,
    reconstruction_metric,
    simulate_physical,
    stack_matrix,
)

angles = st.floats(-10, 10, allow_nan=False, allow_infinity=False)

# Circular basis in (H, V) components: columns |R>, |L>
CIRC = np.array([[1, 1], [-1j, 1j]]) / math.sqrt(2)


def textbook_retarder(angle, retardance):
    """Linear-basis retarder R(-a) diag(e^{-i G/2}, e^{i G/2}) R(a), rotated to (R, L)."""
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, s], [-s, c]])
    lin = rot.T @ np.diag([np.exp(-0.5j * retardance), np.exp(0.5j * retardance)]) @ rot
    return CIRC.conj().T @ lin @ CIRC


def random_circular_state(rng, lattice):
    m = lattice.all_sites.size
    a = rng.normal(size=(m, 2)) + 1j * rng.normal(size=(m, 2))
    return WalkerCoinState(lattice, a / np.linalg.norm(a))


# ---------------------------------------------------------------- waveplates

@settings(max_examples=200, deadline=None)
@given(angles)
def test_waveplates_match_textbook_form(a):
    np.testing.assert_allclose(jones_qwp(a), textbook_retarder(a, math.pi / 2), atol=1e-12)
    np.testing.assert_allclose(jones_hwp(a), textbook_retarder(a, math.pi), atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(angles)
def test_waveplate_identities(a):
    q, h = jones_qwp(a), jones_hwp(a)
    for m in (q, h):
        np.testing.assert_allclose(m.conj().T @ m, np.eye(2), atol=1e-12)
        assert abs(np.linalg.det(m) - 1) < 1e-12
    np.testing.assert_allclose(q @ q, h, atol=1e-12)
    # HWP twice is -I: an involution up to global phase
    np.testing.assert_allclose(h @ h, -np.eye(2), atol=1e-12)


def test_hwp_at_zero_swaps_circular_handedness():
    # a half-wave plate turns |R> into |L> (up to phase)
    out = jones_hwp(0.0) @ np.array([1, 0])
    assert abs(out[0]) < 1e-15 and abs(abs(out[1]) - 1) < 1e-15


def test_waveplate_setting_canonical_range():
    assert WaveplateSetting("HWP", math.pi + 0.25).angle == pytest.approx(0.25)
    assert WaveplateSetting("QWP", -0.25).angle == pytest.approx(math.pi - 0.25)
    assert WaveplateSetting("QWP", -1e-17).angle == 0.0
    with pytest.raises(InvalidParameterError):
        WaveplateSetting("LWP", 0.0)
    with pytest.raises(InvalidParameterError):
        WaveplateSetting("QWP", math.nan)


# ---------------------------------------------------------------- decomposition

@pytest.mark.parametrize("coin", [np.eye(2), coin_matrix(CoinParams(math.pi / 4, 0, 0)),
                                  np.array([[0, 1], [1, 0]]), np.diag([1j, -1j]), np.diag([1, 1j])])
def test_decompose_special_coins(coin):
    plates = decompose_coin(coin)
    assert [p.kind for p in plates] == ["QWP", "HWP", "QWP"]
    assert reconstruction_metric(stack_matrix(plates), coin) >= 1 - 1e-9


def test_decompose_haar_random():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        u = unitary_group.rvs(2, random_state=rng)
        assert reconstruction_metric(stack_matrix(decompose_coin(u)), u) >= 1 - 1e-9


def test_decompose_rejects_non_unitary():
    with pytest.raises(InvalidParameterError):
        decompose_coin(np.array([[1, 1], [0, 1]]))


def test_reconstruction_metric_phase_blind():
    u = unitary_group.rvs(2, random_state=1)
    assert reconstruction_metric(u * np.exp(0.4j), u) == pytest.approx(1)
    assert reconstruction_metric(np.eye(2), np.diag([1, -1])) == pytest.approx(0, abs=1e-15)


# ---------------------------------------------------------------- Q-plate

def test_qplate_full_conversion_at_minus_quarter_pi():
    plate = qplate_unitary(QPlateParams(math.pi, -math.pi / 4, 0.5))
    out = plate(WalkerCoinState.basis(Lattice(2), 0, 1))  # |L, 0>
    assert abs(out.amplitude(1, 0) - 1) < 1e-15
    assert np.sum(np.abs(out.amplitudes) ** 2) == pytest.approx(1)
    out = plate(WalkerCoinState.basis(Lattice(2), 0, 0))  # |R, 0>
    assert abs(out.amplitude(-1, 1) - (-1)) < 1e-15


def test_qplate_zero_tuning_is_identity():
    rng = np.random.default_rng(0)
    s = random_circular_state(rng, Lattice(3))
    out = apply_qplate(s, QPlateParams(0.0, 0.3, 0.5))
    np.testing.assert_allclose(out.amplitudes[1:-1], s.amplitudes, atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(angles, angles, st.sampled_from([0.5, 1.0, 1.5, -0.5]))
def test_qplate_unitary(delta, alpha0, q):
    rng = np.random.default_rng(abs(hash((delta, alpha0))) % 2**32)
    lat = Lattice(3)
    states = [random_circular_state(rng, lat) for _ in range(2)]
    outs = [apply_qplate(s, QPlateParams(delta, alpha0, q)) for s in states]
    assert abs(np.linalg.norm(outs[0].amplitudes) - 1) < 1e-12
    inner_in = np.vdot(states[0].amplitudes, states[1].amplitudes)
    inner_out = np.vdot(outs[0].amplitudes, outs[1].amplitudes)
    assert abs(inner_in - inner_out) < 1e-12


def test_qplate_charge_must_be_half_integer():
    with pytest.raises(InvalidParameterError):
        QPlateParams(q=0.3)


# ---------------------------------------------------------------- compilation

def _ideal(coins):
    return project_coin(evolve(WalkerCoinState.initial(), coins))


def _check_equivalent(circuit, coins):
    w_ideal, p_ideal = _ideal(coins)
    w_phys, p_phys = simulate_physical(circuit)
    assert fidelity(w_phys, w_ideal) >= 1 - 1e-9
    assert abs(p_phys - p_ideal) <= 1e-10


def test_compile_single_step_reference_orientation():
    coins = [CoinParams(0.7, 0.2, -1.1)]
    circuit = compile_walk(coins)
    assert circuit.n_steps == 1 and len(circuit.steps[0].waveplates) == 3
    # the compiled optics equal the ideal step as operators, up to global phase
    rng = np.random.default_rng(1)
    s = random_circular_state(rng, Lattice(0))
    step = circuit.steps[0]
    phys = apply_qplate(apply_coin_matrix(s, stack_matrix(step.waveplates)), step.qplate)
    phys = apply_coin_matrix(phys, stack_matrix(circuit.compensation))
    ideal = evolve(s, coins)
    assert abs(abs(np.vdot(phys.amplitudes.ravel(), ideal.amplitudes.ravel())) - 1) < 1e-12
    _check_equivalent(circuit, coins)


def test_compile_cat_target_coins():
    from quditwalk.optimizer import EngineeringProblem, OptimizerConfig, optimize
    from quditwalk.targets import extremal_cat

    r = optimize(EngineeringProblem(5, extremal_cat(Lattice(5), 0.0)), OptimizerConfig(multistarts=1))
    circuit = compile_walk(r.coins)
    w_phys, _ = simulate_physical(circuit)
    assert fidelity(w_phys, extremal_cat(Lattice(5), 0.0)) >= r.fidelity - 1e-9
    _check_equivalent(circuit, r.coins)


def test_compile_random_sequences_arbitrary_alpha0():
    rng = np.random.default_rng(77)
    for _ in range(50):
        coins = [CoinParams(*rng.uniform(-math.pi, math.pi, 3)) for _ in range(5)]
        plates = [QPlateParams(alpha0=a) for a in rng.uniform(-math.pi, math.pi, 5)]
        _check_equivalent(compile_walk(coins, plates), coins)


def test_compile_rejects_partial_conversion():
    with pytest.raises(UnsupportedConfigurationError):
        compile_walk([CoinParams(0, 0, 0)], QPlateParams(delta=math.pi / 2))
    with pytest.raises(UnsupportedConfigurationError):
        compile_walk([CoinParams(0, 0, 0)], QPlateParams(q=1.0))
    with pytest.raises(InvalidParameterError):
        compile_walk([CoinParams(0, 0, 0)] * 2, [QPlateParams()])


def test_empty_waveplate_step_is_pure_qplate():
    qp = QPlateParams(alpha0=0.3)
    circuit = PhysicalCircuit(steps=(PhysicalStep((), qp),), compensation=(), projection=CoinKet.plus())
    init = WalkerCoinState.initial()
    w, p = simulate_physical(circuit, init)
    w_ref, p_ref = project_coin(apply_qplate(init, qp))
    assert fidelity(w, w_ref) == pytest.approx(1) and p == pytest.approx(p_ref)


def test_circuit_export_formats():
    circuit = compile_walk([CoinParams(0.3, 0.1, 0.2)] * 2, QPlateParams(alpha0=0.1))
    rows = circuit_to_dict(circuit)
    kinds = [r["element"] for r in rows]
    assert kinds == ["QWP", "HWP", "QWP", "QPLATE"] * 2 + ["QWP", "HWP", "QWP"]
    assert rows[3] == {"step": 1, "element": "QPLATE", "delta": math.pi, "alpha0": 0.1, "q": 0.5}
    lines = circuit_table(circuit).splitlines()
    assert lines[0].split("\t") == ["step", "element", "angle", "delta", "alpha0", "q"]
    assert len(lines) == len(rows) + 1
    assert float(lines[1].split("\t")[2]) == rows[0]["angle"]
