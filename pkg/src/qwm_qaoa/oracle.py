"""Feasibility oracle ``U_f = U1^dagger U2 U1`` built from QFT arithmetic.

``U1`` writes ``w(x) + c0`` into the weight register, ``U2`` flips a flag
when that sum has no set bit at position ``k`` or above, and ``U1^dagger``
cleans the weight register again. ``k`` and ``c0`` are chosen so that
``2^k = capacity + c0 + 1``, which turns ``w(x) <= capacity`` into a test on
high bits only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .knapsack import KnapsackInstance
from .simulator import (
    RegisterLayout,
    StateVector,
    apply_1q,
    apply_controlled_phase,
    apply_mcx,
    qft,
    register_marginal,
)

CLEAN_TOL = 1e-12


@dataclass(frozen=True)
class OracleParams:
    k: int
    c0: int
    q_w: int

    @property
    def threshold(self) -> int:
        """``capacity + c0 + 1``."""
        return 2**self.k


def derive_oracle_params(inst: KnapsackInstance) -> OracleParams:
    """Smallest ``k`` with ``2^k >= C + 1``; register wide enough for ``w_total + c0``."""
    k = inst.capacity.bit_length()
    c0 = 2**k - inst.capacity - 1
    q_w = max(1, (inst.total_weight + c0).bit_length())
    return OracleParams(k=k, c0=c0, q_w=q_w)


def layout_for(inst: KnapsackInstance, params: OracleParams | None = None) -> RegisterLayout:
    params = params or derive_oracle_params(inst)
    return RegisterLayout.contiguous(inst.n_items, params.q_w)


def qubit_count(inst: KnapsackInstance) -> int:
    return layout_for(inst).n_qubits


def _check(layout: RegisterLayout, inst: KnapsackInstance, params: OracleParams) -> None:
    if len(layout.choice) != inst.n_items:
        raise ValueError("layout choice register does not match the instance size")
    if len(layout.weight) != params.q_w:
        raise ValueError("layout weight register does not match oracle params")


def _fourier_add_phase(amount: int, t: int) -> float:
    # PHASE angle on register bit t that adds `amount` in the no-swap Fourier basis
    return 2 * math.pi * (amount % 2 ** (t + 1)) / 2 ** (t + 1)


def apply_u1(
    state: StateVector,
    layout: RegisterLayout,
    inst: KnapsackInstance,
    params: OracleParams,
    inverse: bool = False,
) -> StateVector:
    """|x, K> -> |x, K + w(x) + c0 mod 2^q_w>; ``inverse`` subtracts instead."""
    _check(layout, inst, params)
    sign = -1.0 if inverse else 1.0
    reg = layout.weight
    qft(state, reg, inverse=False)
    for t, q in enumerate(reg):
        angle = _fourier_add_phase(params.c0, t)
        if angle:
            apply_1q(state, q, "PHASE", sign * angle)
    for i, w in enumerate(inst.weights):
        for t, q in enumerate(reg):
            angle = _fourier_add_phase(w, t)
            if angle:
                apply_controlled_phase(state, layout.choice[i], q, sign * angle)
    qft(state, reg, inverse=True)
    return state


def apply_u2(state: StateVector, layout: RegisterLayout, params: OracleParams, flag: int) -> StateVector:
    """Flip ``flag`` where weight-register bits ``k..q_w-1`` are all zero."""
    controls = [(layout.weight[t], 0) for t in range(params.k, params.q_w)]
    return apply_mcx(state, controls, flag)


def weight_register_dirt(state: StateVector, layout: RegisterLayout) -> float:
    marg = register_marginal(state, layout.weight)
    return float(marg[1:].sum())


def apply_oracle(
    state: StateVector,
    layout: RegisterLayout,
    inst: KnapsackInstance,
    params: OracleParams,
    flag: int,
    check: bool = False,
) -> StateVector:
    """``flag ^= f(x)`` on every component; the weight register must start clean."""
    if flag in layout.weight or flag in layout.choice:
        raise ValueError("flag must be an ancilla qubit")
    if check:
        dirt = weight_register_dirt(state, layout)
        if dirt > CLEAN_TOL:
            raise RuntimeError(f"weight register not clean before oracle (mass {dirt:.3e})")
    apply_u1(state, layout, inst, params)
    apply_u2(state, layout, params, flag)
    apply_u1(state, layout, inst, params, inverse=True)
    return state
