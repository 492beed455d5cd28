import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qwm_qaoa.knapsack import (
    KnapsackInstance,
    approximation_ratio,
    feasibility_table,
    format_bits,
    is_feasible,
    load_instance,
    parse_bits,
    save_instance,
    solve_brute_force,
    solve_dp,
    total_value,
    total_weight,
    value_table,
)
from qwm_qaoa.portfolio import fixture

from conftest import FIXTURE_NAMES


def unit(values, capacity):
    return KnapsackInstance(tuple(values), (1,) * len(values), capacity)


def test_total_weight_examples():
    assert total_weight((0, 0, 0), unit([1, 1, 1], 1)) == 0
    assert total_weight((1, 1), unit([1, 1], 1)) == 2
    assert total_weight((1, 0, 1, 1), unit([1, 1, 1, 1], 2)) == 3


def test_total_value_examples():
    assert total_value((0, 1), fixture("stocks2")) == pytest.approx(0.2602)
    assert total_value((0, 0), fixture("stocks2")) == 0.0
    assert total_value((1, 1, 0, 0), fixture("stocks4")) == pytest.approx(0.5032)


def test_is_feasible_examples():
    inst = fixture("stocks4")
    assert is_feasible((1, 1, 0, 0), inst)
    assert not is_feasible((1, 1, 1, 0), inst)
    assert is_feasible((0, 0, 0, 0), inst)


@pytest.mark.parametrize("fn", [total_weight, total_value, is_feasible])
def test_length_mismatch(fn):
    with pytest.raises(ValueError):
        fn((1, 0, 1), fixture("stocks2"))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(values=(), weights=(), capacity=0),
        dict(values=(1.0,), weights=(1, 2), capacity=1),
        dict(values=(1.0,), weights=(1.5,), capacity=1),
        dict(values=(1.0,), weights=(-1,), capacity=1),
        dict(values=(1.0,), weights=(0,), capacity=1),
        dict(values=(1.0,), weights=(1,), capacity=-1),
        dict(values=(float("nan"),), weights=(1,), capacity=1),
    ],
)
def test_instance_validation(kwargs):
    with pytest.raises(ValueError):
        KnapsackInstance(**kwargs)


def test_instance_json_round_trip(tmp_path):
    inst = fixture("stocks5")
    save_instance(inst, tmp_path / "i.json")
    back = load_instance(tmp_path / "i.json")
    assert back == inst and back.name == "stocks5" and back.tickers == inst.tickers


def test_bits_text_round_trip():
    assert format_bits((0, 1, 1)) == "011"
    assert parse_bits("011") == (0, 1, 1)
    with pytest.raises(ValueError):
        parse_bits("012")


# DP optima, frozen from exhaustive enumeration
EXPECTED = {
    "stocks2": ((0, 1), 0.2602),
    "stocks3": ((0, 1, 0), 0.2602),
    "stocks4": ((0, 1, 0, 1), 0.5032),
    "stocks5": ((0, 1, 0, 0, 1), 0.5032),
    "stocks6": (None, 0.9235),
    "stocks7": ((1, 0, 0, 0, 1, 1, 0), 0.9489),
    "stocks8": ((1, 0, 0, 1, 1, 1, 0, 0), 1.1410),
}


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_fixture_optima(name):
    inst = fixture(name)
    bits, value = EXPECTED[name]
    dp, bf = solve_dp(inst), solve_brute_force(inst)
    assert dp.value == pytest.approx(value, abs=1e-9)
    assert bf.value == pytest.approx(value, abs=1e-9)
    assert dp.bits == bf.bits
    if bits is not None:
        assert dp.bits == bits
    assert dp.weight <= inst.capacity


def test_capacity_zero_selects_nothing():
    inst = unit([0.3, 0.5, 0.1], 0)
    assert solve_dp(inst).bits == (0, 0, 0)
    assert solve_brute_force(inst).bits == (0, 0, 0)


def test_all_items_fit():
    inst = unit([0.3, 0.5, 0.1], 3)
    assert solve_dp(inst).bits == (1, 1, 1)


def test_negative_values_left_out():
    inst = unit([-0.2, 0.4, -0.1], 3)
    assert solve_dp(inst).bits == (0, 1, 0)
    assert solve_brute_force(inst).bits == (0, 1, 0)


def test_dp_matches_brute_force_random():
    rng = np.random.default_rng(1234)
    for trial in range(1000):
        n = int(rng.integers(1, 13))
        weights = tuple(int(w) for w in rng.integers(0, 11, size=n))
        if not any(weights):
            weights = (1,) + weights[1:]
        if trial % 3 == 0:
            # small integers force plenty of value ties
            values = tuple(float(v) for v in rng.integers(-2, 5, size=n))
        else:
            values = tuple(rng.uniform(-0.5, 1.0, size=n))
        cap = int(rng.integers(0, sum(weights) + 2))
        inst = KnapsackInstance(values, weights, cap)
        dp, bf = solve_dp(inst), solve_brute_force(inst)
        assert dp.value == pytest.approx(bf.value, abs=1e-9), inst
        assert dp.bits == bf.bits, inst
        assert dp.weight <= cap


@st.composite
def instances(draw, max_n=8):
    n = draw(st.integers(1, max_n))
    weights = draw(st.lists(st.integers(0, 6), min_size=n, max_size=n).filter(any))
    values = draw(st.lists(st.floats(-1, 1, allow_nan=False), min_size=n, max_size=n))
    cap = draw(st.integers(0, sum(weights) + 1))
    return KnapsackInstance(tuple(values), tuple(weights), cap)


@given(instances())
def test_dp_optimal_and_feasible(inst):
    sol = solve_dp(inst)
    assert is_feasible(sol.bits, inst)
    assert sol.value == pytest.approx(total_value(sol.bits, inst))
    vals, feas = value_table(inst), feasibility_table(inst)
    assert sol.value >= vals[feas].max() - 1e-9


@given(instances())
def test_optimum_monotone_in_capacity(inst):
    bigger = KnapsackInstance(inst.values, inst.weights, inst.capacity + 1)
    assert solve_dp(bigger).value >= solve_dp(inst).value - 1e-12


@given(instances(max_n=6))
def test_tables_match_scalar_functions(inst):
    vals, feas = value_table(inst), feasibility_table(inst)
    for k, bits in enumerate(itertools.product((0, 1), repeat=inst.n_items)):
        idx = sum(b << i for i, b in enumerate(bits))
        assert vals[idx] == pytest.approx(total_value(bits, inst))
        assert feas[idx] == is_feasible(bits, inst)


def test_approximation_ratio():
    assert approximation_ratio(0.5, 1.0) == 0.5
    with pytest.raises(ValueError):
        approximation_ratio(0.5, 0.0)
