import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qwm_qaoa.knapsack import KnapsackInstance, feasibility_table
from qwm_qaoa.mixer import (
    MixerConfig,
    SectorMixer,
    apply_mixer,
    apply_partial_mixer,
    apply_phase_separator,
    apply_vi,
    exact_walk,
    walk_hamiltonian,
)
from qwm_qaoa.oracle import derive_oracle_params, layout_for
from qwm_qaoa.portfolio import fixture
from qwm_qaoa.simulator import StateVector, choice_probabilities, init_state, register_marginal, work_register_dirt

from conftest import FIXTURE_NAMES


def setup(inst):
    params = derive_oracle_params(inst)
    return params, layout_for(inst, params)


def choice_basis(layout, x):
    return StateVector.basis(layout.n_qubits, x)  # choice register occupies the low qubits


def feasible_superposition(inst, layout, rng):
    feas = feasibility_table(inst)
    amps = np.zeros(2**layout.n_qubits, dtype=complex)
    k = np.flatnonzero(feas)
    amps[k] = rng.normal(size=k.size) + 1j * rng.normal(size=k.size)
    return StateVector(layout.n_qubits, amps / np.linalg.norm(amps))


def test_vi_ancilla_values():
    inst = fixture("stocks3")  # capacity 1
    params, layout = setup(inst)
    fn, fx, fi = layout.ancillas
    cases = {
        (0b000, 0): (1, 1, 1),  # 000 and 100 feasible
        (0b011, 0): (0, 0, 0),  # 110 and 010: own infeasible, neighbour feasible -> fn=1
        (0b010, 1): (1, 1, 1),
        (0b011, 2): (0, 0, 0),
    }
    # expected (fn, fx, fi) recomputed classically
    for (x, i), _ in cases.items():
        bits = [(x >> j) & 1 for j in range(3)]
        nb = list(bits)
        nb[i] ^= 1
        f_x, f_n = int(sum(bits) <= 1), int(sum(nb) <= 1)
        state = choice_basis(layout, x)
        apply_vi(state, layout, inst, params, i, check=True)
        marg = register_marginal(state, [fn, fx, fi])
        want = f_n | (f_x << 1) | ((f_n & f_x) << 2)
        assert marg[want] == pytest.approx(1.0, abs=1e-9)
        apply_vi(state, layout, inst, params, i, inverse=True)
        assert work_register_dirt(state, layout) < 1e-12


def test_partial_mixer_full_rotation():
    # |10> with theta = pi: item 0 leaves, both endpoints feasible -> -i|00>
    inst = KnapsackInstance((0.3, 0.4), (1, 1), 1)
    params, layout = setup(inst)
    state = choice_basis(layout, 0b01)
    apply_partial_mixer(state, layout, inst, params, 0, math.pi)
    assert state.amplitudes[0] == pytest.approx(-1j, abs=1e-9)
    assert work_register_dirt(state, layout) < 1e-12


def test_partial_mixer_blocked_pair():
    # 11 is infeasible, so the pair (01, 11) must not rotate
    inst = KnapsackInstance((0.3, 0.4), (1, 1), 1)
    params, layout = setup(inst)
    state = choice_basis(layout, 0b01)
    apply_partial_mixer(state, layout, inst, params, 1, math.pi)
    assert state.amplitudes[0b01] == pytest.approx(1.0, abs=1e-9)


def test_zero_beta_is_identity():
    inst = fixture("stocks3")
    params, layout = setup(inst)
    state = init_state(layout)
    before = state.amplitudes.copy()
    apply_mixer(state, layout, inst, params, 0.0, 2)
    assert np.max(np.abs(state.amplitudes - before)) < 1e-10


def test_beta_bounds():
    inst = fixture("stocks2")
    params, layout = setup(inst)
    with pytest.raises(ValueError):
        apply_mixer(init_state(layout), layout, inst, params, 3 * math.pi, 3)
    with pytest.raises(ValueError):
        apply_mixer(init_state(layout), layout, inst, params, -0.1, 3)
    with pytest.raises(ValueError):
        MixerConfig(0)
    assert MixerConfig(3).beta_bound == pytest.approx(3 * math.pi)


@pytest.mark.parametrize("name", ["stocks2", "stocks3", "stocks4", "stocks5"])
def test_mixer_keeps_feasible_subspace_and_cleans_ancillas(name):
    inst = fixture(name)
    params, layout = setup(inst)
    feas = feasibility_table(inst)
    state = feasible_superposition(inst, layout, np.random.default_rng(3))
    apply_mixer(state, layout, inst, params, 1.3, 2)
    assert work_register_dirt(state, layout) < 1e-10
    probs = choice_probabilities(state, layout)
    assert probs[~feas].sum() < 1e-10
    assert abs(state.norm() - 1) < 1e-10


def test_infeasible_states_stay_put():
    inst = fixture("stocks3")
    params, layout = setup(inst)
    for x in range(8):
        if bin(x).count("1") > 1:
            state = choice_basis(layout, x)
            apply_mixer(state, layout, inst, params, 1.1, 1)
            assert abs(state.amplitudes[x]) == pytest.approx(1.0, abs=1e-9)


def test_phase_separator():
    inst = fixture("stocks2")
    params, layout = setup(inst)
    state = init_state(layout)
    apply_phase_separator(state, layout, inst, 2.0)
    v = [0.0, 0.2430, 0.2602, 0.5032]
    for x in range(4):
        assert state.amplitudes[x] == pytest.approx(0.5 * np.exp(-2j * v[x]), abs=1e-12)


def test_walk_hamiltonian_structure():
    unconstrained = KnapsackInstance((0.1, 0.2, 0.3), (1, 1, 1), 3)
    B = walk_hamiltonian(unconstrained)
    assert np.array_equal(B, B.T)
    for x in range(8):
        for y in range(8):
            assert B[x, y] == (bin(x ^ y).count("1") == 1)
    Bc = walk_hamiltonian(fixture("stocks3"))
    assert np.array_equal(Bc, Bc.T)
    assert Bc[0b011].sum() == 0


def _trotter_error(inst, beta, m):
    params, layout = setup(inst)
    exact = exact_walk(inst, beta)
    dim = 2**inst.n_items
    err = 0.0
    for x in range(dim):
        state = choice_basis(layout, x)
        apply_mixer(state, layout, inst, params, beta, m)
        err = max(err, np.max(np.abs(state.amplitudes[:dim] - exact[:, x])))
    return err


def test_trotter_error_decreases():
    inst = KnapsackInstance((0.2430, 0.2602, 0.2430), (1, 1, 1), 2)
    errs = [_trotter_error(inst, 1.0, m) for m in (1, 2, 4, 8)]
    assert all(a > b for a, b in zip(errs, errs[1:])), errs


def test_trotter_error_is_first_order():
    # quadrupling m should cut the error by about four
    inst = fixture("stocks3")
    e16, e64 = _trotter_error(inst, 0.5, 16), _trotter_error(inst, 0.5, 64)
    assert e64 < 5e-3
    assert 3.0 < e16 / e64 < 5.0


@pytest.mark.parametrize("name", FIXTURE_NAMES[:6])
def test_sector_matches_circuit(name):
    inst = fixture(name)
    params, layout = setup(inst)
    sector = SectorMixer(inst, layout, params)
    feas = feasibility_table(inst)
    for i in range(inst.n_items):
        idx = np.arange(2**inst.n_items)
        nb = idx ^ (1 << i)
        assert np.array_equal(sector.pair_masks[i], feas & feas[nb])
    rng = np.random.default_rng(11)
    state = init_state(layout)
    psi = sector.initial()
    for _ in range(2):
        g, b, m = rng.uniform(0, 2 * np.pi), rng.uniform(0, 2 * np.pi), 2
        apply_phase_separator(state, layout, inst, g)
        apply_mixer(state, layout, inst, params, b, m)
        psi = sector.layer(psi, g, b, m)
    assert np.max(np.abs(state.amplitudes - sector.embed(psi, layout).amplitudes)) < 1e-10


@settings(max_examples=20)
@given(st.floats(0, 2 * math.pi - 1e-9), st.floats(0, 3 * math.pi - 1e-9))
def test_sector_batch_matches_single(gamma, beta):
    inst = fixture("stocks4")
    params, layout = setup(inst)
    sector = SectorMixer(inst, layout, params)
    gammas = np.array([gamma, 0.5])
    betas = np.array([beta, 1.5])
    batch = sector.layer(sector.initial((2,)), gammas, betas, 3)
    for j in range(2):
        single = sector.layer(sector.initial(), gammas[j], betas[j], 3)
        assert np.allclose(batch[j], single, atol=1e-13)
