"""Binary knapsack semantics: instances, feasibility, and exact classical solvers.

Bitstrings are tuples of 0/1 where position ``i`` is item ``i``; they print
left-to-right starting at item 0, so ``"01"`` selects only item 1.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

BitString = tuple[int, ...]

MAX_BRUTE_FORCE_ITEMS = 25
# Values within this distance of the optimum count as tied.
VALUE_TIE_TOL = 1e-12


@dataclass(frozen=True)
class KnapsackInstance:
    """A 0-1 knapsack problem with real values and integer weights.

    ``tickers`` and ``name`` are optional labels carried along for reporting.
    """

    values: tuple[float, ...]
    weights: tuple[int, ...]
    capacity: int
    tickers: tuple[str, ...] | None = None
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        weights = tuple(self.weights)
        if len(values) == 0:
            raise ValueError("knapsack instance needs at least one item")
        if len(values) != len(weights):
            raise ValueError(
                f"values and weights differ in length ({len(values)} != {len(weights)})"
            )
        if not all(np.isfinite(values)):
            raise ValueError("item values must be finite")
        for w in weights:
            if isinstance(w, (bool, np.bool_)) or int(w) != w:
                raise ValueError(f"weights must be integers, got {w!r}")
        weights = tuple(int(w) for w in weights)
        if any(w < 0 for w in weights):
            raise ValueError("weights must be non-negative")
        if not any(w > 0 for w in weights):
            raise ValueError("at least one weight must be positive")
        if int(self.capacity) != self.capacity or self.capacity < 0:
            raise ValueError(f"capacity must be a non-negative integer, got {self.capacity!r}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "capacity", int(self.capacity))
        if self.tickers is not None:
            tickers = tuple(str(t) for t in self.tickers)
            if len(tickers) != len(values):
                raise ValueError("tickers must match the number of items")
            object.__setattr__(self, "tickers", tickers)

    @property
    def n_items(self) -> int:
        return len(self.values)

    @property
    def total_weight(self) -> int:
        return sum(self.weights)

    @property
    def is_trivial(self) -> bool:
        """True when every selection fits, so the constraint never binds."""
        return self.capacity >= self.total_weight

    def to_dict(self) -> dict:
        d = {
            "values": list(self.values),
            "weights": list(self.weights),
            "capacity": self.capacity,
        }
        if self.tickers is not None:
            d["tickers"] = list(self.tickers)
        if self.name is not None:
            d["name"] = self.name
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "KnapsackInstance":
        missing = {"values", "weights", "capacity"} - set(d)
        if missing:
            raise ValueError(f"instance is missing fields: {sorted(missing)}")
        return cls(
            values=tuple(d["values"]),
            weights=tuple(d["weights"]),
            capacity=d["capacity"],
            tickers=tuple(d["tickers"]) if d.get("tickers") is not None else None,
            name=d.get("name"),
        )


def load_instance(path) -> KnapsackInstance:
    with open(path, encoding="utf-8") as fh:
        return KnapsackInstance.from_dict(json.load(fh))


def save_instance(inst: KnapsackInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(inst.to_dict(), fh, indent=2)
        fh.write("\n")


@dataclass(frozen=True)
class BksSolution:
    """Best known (here: exact) solution of an instance."""

    bits: BitString
    value: float
    weight: int

    @property
    def bitstring(self) -> str:
        return format_bits(self.bits)


def format_bits(bits: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in bits)


def parse_bits(text: str) -> BitString:
    """Parse ``"0101"`` or ``"(0,1,0,1)"`` into a bit tuple."""
    cleaned = text.strip().strip("()").replace(",", "").replace(" ", "")
    if not cleaned or set(cleaned) - {"0", "1"}:
        raise ValueError(f"not a bitstring: {text!r}")
    return tuple(int(c) for c in cleaned)


def _check_length(x: Sequence[int], inst: KnapsackInstance) -> None:
    if len(x) != inst.n_items:
        raise ValueError(f"bitstring has {len(x)} bits, instance has {inst.n_items} items")


def total_weight(x: Sequence[int], inst: KnapsackInstance) -> int:
    _check_length(x, inst)
    return sum(w for b, w in zip(x, inst.weights) if b)


def total_value(x: Sequence[int], inst: KnapsackInstance) -> float:
    _check_length(x, inst)
    # accumulate in item order so every caller gets the same float for the same bits
    total = 0.0
    for b, v in zip(x, inst.values):
        if b:
            total += v
    return total


def is_feasible(x: Sequence[int], inst: KnapsackInstance) -> bool:
    return total_weight(x, inst) <= inst.capacity


def _solution(bits: Iterable[int], inst: KnapsackInstance) -> BksSolution:
    bits = tuple(int(b) for b in bits)
    return BksSolution(bits=bits, value=total_value(bits, inst), weight=total_weight(bits, inst))


def solve_brute_force(inst: KnapsackInstance) -> BksSolution:
    """Enumerate all 2^N selections.

    Among optimal selections the lexicographically smallest bit tuple wins.
    """
    if inst.n_items > MAX_BRUTE_FORCE_ITEMS:
        raise ValueError(
            f"brute force limited to {MAX_BRUTE_FORCE_ITEMS} items, got {inst.n_items}"
        )
    n = inst.n_items
    # row k lists the selections in lexicographic order (item 0 most significant)
    rows = (np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)) & 1
    feasible = rows @ np.asarray(inst.weights) <= inst.capacity
    values = np.where(feasible, rows @ np.asarray(inst.values), -np.inf)
    first = int(np.argmax(values >= values.max() - VALUE_TIE_TOL))
    return _solution(rows[first], inst)


def solve_dp(inst: KnapsackInstance) -> BksSolution:
    """Exact dynamic program over integer capacity.

    ``best[i, c]`` is the optimal value using items ``i..N-1`` within capacity
    ``c``. Reconstruction walks forward and leaves an item out whenever that
    still reaches the optimum, which yields the lexicographically smallest
    optimal selection (same rule as :func:`solve_brute_force`).
    """
    n, cap = inst.n_items, inst.capacity
    cap = min(cap, inst.total_weight)
    best = np.zeros((n + 1, cap + 1))
    for i in range(n - 1, -1, -1):
        w, v = inst.weights[i], inst.values[i]
        best[i] = best[i + 1]
        if w <= cap:
            take = best[i + 1, : cap + 1 - w] + v
            best[i, w:] = np.maximum(best[i + 1, w:], take)

    bits = []
    c = cap
    for i in range(n):
        w, v = inst.weights[i], inst.values[i]
        if best[i + 1, c] >= best[i, c] - VALUE_TIE_TOL or w > c:
            bits.append(0)
        else:
            bits.append(1)
            c -= w
    return _solution(bits, inst)


def approximation_ratio(achieved: float, optimal: float) -> float:
    if optimal <= 0:
        raise ValueError(f"approximation ratio needs a positive optimum, got {optimal}")
    return achieved / optimal


def enumerate_bitstrings(n: int) -> list[BitString]:
    """All n-bit tuples indexed so that entry ``k`` has bit ``i`` = ``(k >> i) & 1``."""
    return [tuple((k >> i) & 1 for i in range(n)) for k in range(2**n)]


def value_table(inst: KnapsackInstance) -> np.ndarray:
    """v(x) for every basis index of the choice register (bit i of the index = item i)."""
    n = inst.n_items
    idx = np.arange(2**n)
    bits = (idx[:, None] >> np.arange(n)) & 1
    return bits @ np.asarray(inst.values)


def feasibility_table(inst: KnapsackInstance) -> np.ndarray:
    n = inst.n_items
    idx = np.arange(2**n)
    bits = (idx[:, None] >> np.arange(n)) & 1
    return bits @ np.asarray(inst.weights) <= inst.capacity


def warn_if_trivial(inst: KnapsackInstance) -> None:
    if inst.is_trivial:
        warnings.warn(
            f"capacity {inst.capacity} admits every selection (total weight {inst.total_weight})",
            stacklevel=2,
        )
