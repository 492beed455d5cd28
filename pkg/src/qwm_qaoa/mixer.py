"""Quantum-walk mixer and phase separator.

The mixer walks between Hamming neighbours ``x`` and ``n_i(x)`` only when
both are feasible. Each partial mixer computes the feasibility of ``x`` and
its ``i``-th neighbour into ancillas (``V_i``), rotates choice qubit ``i``
under control of their AND, and uncomputes. ``m`` Trotter repetitions of the
``N`` partial mixers, each with angle ``2 beta / m``, approximate
``exp(-i beta B)``.

Besides the gate-level circuit this module offers a *sector* form: on states
whose weight register and ancillas are clean the partial mixer is exactly a
rotation on the choice register restricted to feasible pairs. The pair masks
are read off the gate-level ``V_i`` so the sector form inherits whatever the
circuit does.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .knapsack import KnapsackInstance, feasibility_table, value_table
from .oracle import OracleParams, apply_oracle
from .simulator import (
    RegisterLayout,
    StateVector,
    apply_1q,
    apply_controlled_rx,
    apply_mcx,
    init_state,
    register_marginal,
    work_register_dirt,
)


@dataclass(frozen=True)
class MixerConfig:
    trotter_steps: int = 3

    def __post_init__(self):
        if int(self.trotter_steps) != self.trotter_steps or self.trotter_steps < 1:
            raise ValueError(f"trotter_steps must be a positive integer, got {self.trotter_steps!r}")

    @property
    def beta_bound(self) -> float:
        return self.trotter_steps * math.pi


def apply_vi(
    state: StateVector,
    layout: RegisterLayout,
    inst: KnapsackInstance,
    params: OracleParams,
    i: int,
    inverse: bool = False,
    check: bool = False,
) -> StateVector:
    """|x,0,0,0> -> |x, f(n_i(x)), f(x), f(x) f(n_i(x))> on the (fn, fx, fi) ancillas."""
    if check and not inverse and work_register_dirt(state, layout) > 1e-12:
        raise RuntimeError("mixer ancillas are not clean before V_i")
    xi = layout.choice[i]
    fn, fx, fi = layout.ancillas

    def neighbour():
        apply_1q(state, xi, "X")
        apply_oracle(state, layout, inst, params, fn)
        apply_1q(state, xi, "X")

    def own():
        apply_oracle(state, layout, inst, params, fx)

    def both():
        apply_mcx(state, [(fn, 1), (fx, 1)], fi)

    # every block is self-inverse, so the inverse is the reversed sequence
    steps = [neighbour, own, both]
    for step in reversed(steps) if inverse else steps:
        step()
    return state


def apply_partial_mixer(
    state: StateVector,
    layout: RegisterLayout,
    inst: KnapsackInstance,
    params: OracleParams,
    i: int,
    theta: float,
) -> StateVector:
    apply_vi(state, layout, inst, params, i)
    apply_controlled_rx(state, layout.ancilla_fi, layout.choice[i], theta)
    apply_vi(state, layout, inst, params, i, inverse=True)
    return state


def check_beta(beta: float, m: int) -> None:
    bound = MixerConfig(m).beta_bound
    if not 0.0 <= beta < bound:
        raise ValueError(f"beta={beta} outside [0, {bound})")


def apply_mixer(
    state: StateVector,
    layout: RegisterLayout,
    inst: KnapsackInstance,
    params: OracleParams,
    beta: float,
    m: int,
) -> StateVector:
    check_beta(beta, m)
    theta = 2.0 * beta / m
    for _ in range(m):
        for i in range(inst.n_items):
            apply_partial_mixer(state, layout, inst, params, i, theta)
    return state


def apply_phase_separator(
    state: StateVector,
    layout: RegisterLayout,
    inst: KnapsackInstance,
    gamma: float,
) -> StateVector:
    """e^{-i gamma v(x)}, one PHASE gate per item since v is additive."""
    for q, v in zip(layout.choice, inst.values):
        apply_1q(state, q, "PHASE", -gamma * v)
    return state


def walk_hamiltonian(inst: KnapsackInstance) -> np.ndarray:
    """Dense ``B`` on the choice space from classical feasibility.

    ``<n_i(x)|B|x> = 1`` when both ``x`` and ``n_i(x)`` are feasible.
    """
    n = inst.n_items
    feas = feasibility_table(inst)
    dim = 2**n
    B = np.zeros((dim, dim))
    for x in range(dim):
        for i in range(n):
            y = x ^ (1 << i)
            if feas[x] and feas[y]:
                B[y, x] = 1.0
    return B


def exact_walk(inst: KnapsackInstance, beta: float) -> np.ndarray:
    return expm(-1j * beta * walk_hamiltonian(inst))


class SectorMixer:
    """QAOA layers on the clean-work-register sector of the QWM circuit.

    Amplitude arrays have shape ``(..., 2^N)`` and are indexed like the choice
    register (bit ``i`` = item ``i``). Leading axes are a batch: ``gamma`` and
    ``beta`` may be arrays broadcasting against them, so a whole grid of angle
    pairs is evaluated in one pass.
    """

    def __init__(self, inst: KnapsackInstance, layout: RegisterLayout, params: OracleParams):
        self.inst = inst
        self.n = inst.n_items
        self.values = value_table(inst)
        self.pair_masks = self._masks_from_circuit(inst, layout, params)
        # flat indices of the rotating pairs: low member has item i absent
        idx = np.arange(2**self.n)
        self._pairs = []
        for i in range(self.n):
            lo = np.flatnonzero(self.pair_masks[i] & ((idx >> i) & 1 == 0))
            self._pairs.append((lo, lo | (1 << i)))

    @staticmethod
    def _masks_from_circuit(inst, layout, params) -> list[np.ndarray]:
        masks = []
        watch = list(layout.choice) + [layout.ancilla_fi]
        n = inst.n_items
        for i in range(inst.n_items):
            state = init_state(layout)
            apply_vi(state, layout, inst, params, i)
            marg = register_marginal(state, watch)
            # marg index = x + 2^n * fi; each x carries 2^-n
            masks.append(marg[2**n:] > 0.5 / 2**n)
        return masks

    def initial(self, batch: tuple[int, ...] = ()) -> np.ndarray:
        return np.full(batch + (2**self.n,), 2 ** (-self.n / 2), dtype=complex)

    def phase(self, psi: np.ndarray, gamma) -> np.ndarray:
        gamma = np.asarray(gamma, dtype=float)[..., None]
        return psi * np.exp(-1j * gamma * self.values)

    def _rotate(self, psi: np.ndarray, i: int, c, s) -> None:
        lo, hi = self._pairs[i]
        a0 = psi[..., lo]
        a1 = psi[..., hi]
        psi[..., lo] = c * a0 - 1j * s * a1
        psi[..., hi] = c * a1 - 1j * s * a0

    def partial(self, psi: np.ndarray, i: int, theta) -> np.ndarray:
        psi = psi.copy()
        theta = np.asarray(theta, dtype=float)[..., None]
        self._rotate(psi, i, np.cos(theta / 2), np.sin(theta / 2))
        return psi

    def mix(self, psi: np.ndarray, beta, m: int) -> np.ndarray:
        beta = np.asarray(beta, dtype=float)
        if np.any(beta < 0) or np.any(beta >= m * math.pi):
            raise ValueError(f"beta outside [0, {m * math.pi})")
        theta = (2.0 * beta / m)[..., None]
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        psi = psi.copy()
        for _ in range(m):
            for i in range(self.n):
                self._rotate(psi, i, c, s)
        return psi

    def layer(self, psi: np.ndarray, gamma, beta, m: int) -> np.ndarray:
        return self.mix(self.phase(psi, gamma), beta, m)

    def expectation(self, psi: np.ndarray) -> np.ndarray:
        return (np.abs(psi) ** 2) @ self.values

    def embed(self, psi: np.ndarray, layout: RegisterLayout) -> StateVector:
        """Place sector amplitudes into a full-register state with clean work qubits."""
        if tuple(layout.choice) != tuple(range(self.n)):
            raise ValueError("embedding assumes the choice register occupies the low qubits")
        amps = np.zeros(2**layout.n_qubits, dtype=complex)
        amps[: 2**self.n] = psi
        return StateVector(layout.n_qubits, amps)
