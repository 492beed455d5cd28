"""Dense statevector simulator with the small gate set the QWM circuit needs.

Amplitude index bit ``j`` is qubit ``j`` (little-endian). Gate kernels
operate in place on a ``(2,) * n`` view of the amplitude array and return the
state so calls can be chained. Nothing is ever renormalised; use
:meth:`StateVector.check_norm` to catch a broken kernel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

NORM_TOL = 1e-10

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)


def rx_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def phase_matrix(phi: float) -> np.ndarray:
    return np.array([[1, 0], [0, np.exp(1j * phi)]], dtype=complex)


class StateVector:
    """Complex amplitudes over ``n_qubits`` qubits."""

    def __init__(self, n_qubits: int, amplitudes: np.ndarray | None = None):
        if n_qubits < 1:
            raise ValueError("need at least one qubit")
        self.n_qubits = n_qubits
        if amplitudes is None:
            amplitudes = np.zeros(2**n_qubits, dtype=complex)
            amplitudes[0] = 1.0
        else:
            amplitudes = np.array(amplitudes, dtype=complex).reshape(-1)
            if amplitudes.size != 2**n_qubits:
                raise ValueError(f"expected {2**n_qubits} amplitudes, got {amplitudes.size}")
        self.amplitudes = amplitudes

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    @property
    def tensor(self) -> np.ndarray:
        # axis n-1-q <-> qubit q under C-order reshape
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def check_norm(self, tol: float = NORM_TOL) -> None:
        deviation = abs(self.norm() - 1.0)
        if deviation > tol:
            raise FloatingPointError(f"state norm drifted by {deviation:.3e}")

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits})"


def _check_qubits(state: StateVector, qubits: Iterable[int]) -> None:
    seen = set()
    for q in qubits:
        if not 0 <= q < state.n_qubits:
            raise IndexError(f"qubit {q} out of range for {state.n_qubits} qubits")
        if q in seen:
            raise ValueError(f"qubit {q} used twice in one gate")
        seen.add(q)


def _slice(n: int, fixed: dict[int, int]) -> tuple:
    idx: list = [slice(None)] * n
    for q, b in fixed.items():
        idx[n - 1 - q] = b
    return tuple(idx)


def _apply_2x2(state: StateVector, target: int, u: np.ndarray, controls: dict[int, int]) -> StateVector:
    psi = state.tensor
    n = state.n_qubits
    i0 = _slice(n, {**controls, target: 0})
    i1 = _slice(n, {**controls, target: 1})
    a0 = psi[i0].copy()
    a1 = psi[i1]
    psi[i0] = u[0, 0] * a0 + u[0, 1] * a1
    psi[i1] = u[1, 0] * a0 + u[1, 1] * a1
    return state


def apply_1q(state: StateVector, qubit: int, gate: str, angle: float | None = None) -> StateVector:
    """Apply ``H``, ``X``, ``RX(angle)`` or ``PHASE(angle)`` to one qubit.

    ``RX(t) = cos(t/2) I - i sin(t/2) X``; ``PHASE(t) = diag(1, e^{it})``.
    """
    _check_qubits(state, [qubit])
    gate = gate.upper()
    if gate == "X":
        return apply_mcx(state, [], qubit)
    if gate == "PHASE":
        state.tensor[_slice(state.n_qubits, {qubit: 1})] *= np.exp(1j * _need(angle, gate))
        return state
    if gate == "H":
        u = _H
    elif gate == "RX":
        u = rx_matrix(_need(angle, gate))
    else:
        raise ValueError(f"unknown gate {gate!r}")
    return _apply_2x2(state, qubit, u, {})


def _need(angle, gate):
    if angle is None:
        raise ValueError(f"{gate} needs an angle")
    return float(angle)


def apply_controlled_phase(state: StateVector, control: int, target: int, phi: float) -> StateVector:
    """Multiply amplitudes with control=1 and target=1 by ``e^{i phi}``."""
    _check_qubits(state, [control, target])
    state.tensor[_slice(state.n_qubits, {control: 1, target: 1})] *= np.exp(1j * phi)
    return state


def apply_mcx(
    state: StateVector,
    controls: Sequence[tuple[int, int]],
    target: int,
) -> StateVector:
    """Flip ``target`` wherever every ``(qubit, polarity)`` control matches.

    Polarity 0 means the control fires on ``|0>``. No controls is a plain X.
    """
    fixed = {}
    for q, pol in controls:
        if pol not in (0, 1):
            raise ValueError(f"control polarity must be 0 or 1, got {pol!r}")
        fixed[q] = pol
    _check_qubits(state, [q for q, _ in controls] + [target])
    psi = state.tensor
    n = state.n_qubits
    i0 = _slice(n, {**fixed, target: 0})
    i1 = _slice(n, {**fixed, target: 1})
    tmp = psi[i0].copy()
    psi[i0] = psi[i1]
    psi[i1] = tmp
    return state


def apply_controlled_rx(state: StateVector, control: int, target: int, theta: float) -> StateVector:
    _check_qubits(state, [control, target])
    return _apply_2x2(state, target, rx_matrix(theta), {control: 1})


def qft(state: StateVector, register: Sequence[int], inverse: bool = False) -> StateVector:
    """Quantum Fourier transform on ``register`` without the terminal swaps.

    ``register[0]`` is the least significant bit of the register integer.
    Forward, ``|j>`` maps to a product state in which ``register[t]`` carries
    the phase ``e^{2 pi i j / 2^(t+1)}`` on its ``|1>`` component. Adding an
    integer ``a`` in this basis is therefore ``PHASE(2 pi a / 2^(t+1))`` on
    each ``register[t]``. Read as an integer the output is the textbook QFT
    with its bits reversed.
    """
    register = list(register)
    if not register:
        raise ValueError("empty register")
    _check_qubits(state, register)
    q = len(register)
    if not inverse:
        for t in range(q - 1, -1, -1):
            apply_1q(state, register[t], "H")
            for s in range(t - 1, -1, -1):
                apply_controlled_phase(state, register[s], register[t], math.pi / 2 ** (t - s))
    else:
        for t in range(q):
            for s in range(t):
                apply_controlled_phase(state, register[s], register[t], -math.pi / 2 ** (t - s))
            apply_1q(state, register[t], "H")
    return state


@dataclass(frozen=True)
class RegisterLayout:
    """Qubit assignment: choice register, weight register, three mixer ancillas.

    ``ancilla_fi`` doubles as the feasibility flag when only ``f(x)`` is needed.
    """

    choice: tuple[int, ...]
    weight: tuple[int, ...]
    ancilla_fn: int
    ancilla_fx: int
    ancilla_fi: int

    def __post_init__(self):
        allq = self.all_qubits
        if len(set(allq)) != len(allq):
            raise ValueError("layout qubits must be distinct")
        if sorted(allq) != list(range(len(allq))):
            raise ValueError("layout must use qubits 0..n-1")
        if not self.choice:
            raise ValueError("empty choice register")

    @classmethod
    def contiguous(cls, n_choice: int, n_weight: int) -> "RegisterLayout":
        """Choice qubits first, then the weight register, then fn, fx, fi."""
        w0 = n_choice
        a0 = n_choice + n_weight
        return cls(
            choice=tuple(range(n_choice)),
            weight=tuple(range(w0, w0 + n_weight)),
            ancilla_fn=a0,
            ancilla_fx=a0 + 1,
            ancilla_fi=a0 + 2,
        )

    @property
    def ancillas(self) -> tuple[int, int, int]:
        return (self.ancilla_fn, self.ancilla_fx, self.ancilla_fi)

    @property
    def all_qubits(self) -> tuple[int, ...]:
        return self.choice + self.weight + self.ancillas

    @property
    def n_qubits(self) -> int:
        return len(self.all_qubits)

    @property
    def work_qubits(self) -> tuple[int, ...]:
        return self.weight + self.ancillas


def init_state(layout: RegisterLayout) -> StateVector:
    """|+>^N on the choice register, |0> everywhere else."""
    state = StateVector(layout.n_qubits)
    for q in layout.choice:
        apply_1q(state, q, "H")
    return state


def register_marginal(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Marginal probabilities of ``qubits``; result index bit ``i`` is ``qubits[i]``."""
    n = state.n_qubits
    probs = np.abs(state.tensor) ** 2
    keep_axes = [n - 1 - q for q in qubits]
    other = tuple(a for a in range(n) if a not in keep_axes)
    marg = probs.sum(axis=other) if other else probs
    # remaining axes are in increasing axis order; put qubits[-1] first so it becomes the top bit
    remaining = sorted(keep_axes)
    order = [remaining.index(n - 1 - q) for q in reversed(qubits)]
    return np.transpose(marg, order).reshape(-1)


def choice_probabilities(state: StateVector, layout: RegisterLayout) -> np.ndarray:
    """Array of choice-register probabilities indexed by ``sum_i x_i 2^i``."""
    return register_marginal(state, layout.choice)


def choice_distribution(state: StateVector, layout: RegisterLayout) -> dict[tuple[int, ...], float]:
    probs = choice_probabilities(state, layout)
    n = len(layout.choice)
    return {tuple((k >> i) & 1 for i in range(n)): float(p) for k, p in enumerate(probs)}


def work_register_dirt(state: StateVector, layout: RegisterLayout) -> float:
    """Probability mass with any weight/ancilla qubit set."""
    marg = register_marginal(state, layout.work_qubits)
    return float(marg[1:].sum())


def dump_state(state: StateVector, stream: TextIO, threshold: float = 1e-12) -> None:
    """Write ``index real imag`` lines for amplitudes above ``threshold`` in modulus."""
    for k in np.flatnonzero(np.abs(state.amplitudes) > threshold):
        a = state.amplitudes[k]
        stream.write(f"{k} {a.real:.17g} {a.imag:.17g}\n")
