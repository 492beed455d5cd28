"""QWM-QAOA orchestration: evolution, expectation, angle search and run reports."""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .knapsack import (
    BksSolution,
    KnapsackInstance,
    approximation_ratio,
    feasibility_table,
    format_bits,
    solve_dp,
    total_value,
    value_table,
)
from .mixer import SectorMixer, apply_mixer, apply_phase_separator, check_beta
from .oracle import derive_oracle_params, layout_for
from .simulator import RegisterLayout, StateVector, choice_probabilities, init_state

GAMMA_BOUND = 2 * math.pi
DEFAULT_BUDGET = 200
DEFAULT_REFINE_EVALS = 100
# probabilities closer than this are treated as tied when picking the best bitstring
PROB_TIE_TOL = 1e-12


@dataclass(frozen=True)
class QaoaSchedule:
    p: int
    m: int
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        if self.p < 0 or self.m < 1:
            raise ValueError("need p >= 0 and m >= 1")
        if len(self.gammas) != self.p or len(self.betas) != self.p:
            raise ValueError(f"schedule needs exactly p={self.p} gammas and betas")
        for g in self.gammas:
            if not 0.0 <= g < GAMMA_BOUND:
                raise ValueError(f"gamma={g} outside [0, 2pi)")
        for b in self.betas:
            check_beta(b, self.m)
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))

    @classmethod
    def zeros(cls, p: int, m: int) -> "QaoaSchedule":
        return cls(p, m, (0.0,) * p, (0.0,) * p)

    def to_dict(self) -> dict:
        return {"p": self.p, "m": self.m, "gammas": list(self.gammas), "betas": list(self.betas)}


class _Problem:
    """Per-instance precomputation shared by every evaluation."""

    def __init__(self, inst: KnapsackInstance):
        self.inst = inst
        self.params = derive_oracle_params(inst)
        self.layout = layout_for(inst, self.params)
        self.values = value_table(inst)
        self._sector = None

    @property
    def sector(self) -> SectorMixer:
        if self._sector is None:
            self._sector = SectorMixer(self.inst, self.layout, self.params)
        return self._sector


def evolve(
    inst: KnapsackInstance,
    layout: RegisterLayout,
    schedule: QaoaSchedule,
    backend: str = "circuit",
) -> StateVector:
    """Prepare |+>^N, then apply phase separator and mixer for each layer.

    ``backend="circuit"`` runs the full gate-level circuit; ``"sector"`` runs
    the equivalent reduced kernel and embeds the result.
    """
    params = derive_oracle_params(inst)
    if layout != layout_for(inst, params):
        raise ValueError("layout does not belong to this instance")
    if backend == "circuit":
        state = init_state(layout)
        for g, b in zip(schedule.gammas, schedule.betas):
            apply_phase_separator(state, layout, inst, g)
            apply_mixer(state, layout, inst, params, b, schedule.m)
    elif backend == "sector":
        sector = SectorMixer(inst, layout, params)
        psi = sector.initial()
        for g, b in zip(schedule.gammas, schedule.betas):
            psi = sector.layer(psi, g, b, schedule.m)
        state = sector.embed(psi, layout)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    state.check_norm()
    return state


def expectation(state: StateVector, layout: RegisterLayout, inst: KnapsackInstance) -> float:
    """<H_c> = sum_x p(x) v(x); infeasible x count with their raw value."""
    return float(choice_probabilities(state, layout) @ value_table(inst))


class _Objective:
    """Counts evaluations and remembers the best point seen.

    Ties in value go to the lexicographically smaller parameter vector, so the
    result does not depend on evaluation order.
    """

    def __init__(self, fn, lower, upper):
        self.fn = fn
        self.lower = np.asarray(lower, dtype=float)
        # upper bounds are open
        self.upper = np.nextafter(np.asarray(upper, dtype=float), 0)
        self.evaluations = 0
        self.best_x = None
        self.best_f = -np.inf

    def __call__(self, x) -> float:
        x = np.clip(np.asarray(x, dtype=float), self.lower, self.upper)
        f = float(self.fn(x))
        self.evaluations += 1
        if f > self.best_f or (f == self.best_f and tuple(x) < tuple(self.best_x)):
            self.best_f, self.best_x = f, x.copy()
        return f

    def maximize_from(self, x0, step, maxfev) -> None:
        """Bounded Nelder-Mead ascent from ``x0`` with an axis-aligned initial simplex."""
        x0 = np.clip(np.asarray(x0, dtype=float), self.lower, self.upper)
        simplex = [x0]
        for d in range(len(x0)):
            e = x0.copy()
            e[d] = x0[d] + step[d] if x0[d] + step[d] <= self.upper[d] else x0[d] - step[d]
            simplex.append(e)
        minimize(
            lambda x: -self(x),
            x0,
            method="Nelder-Mead",
            bounds=list(zip(self.lower, self.upper)),
            options={
                "maxfev": maxfev,
                "xatol": 1e-6,
                "fatol": 1e-12,
                "initial_simplex": np.array(simplex),
            },
        )


def _grid(n_pts: int, g_hi: float, b_hi: float, rng: np.random.Generator):
    """Seeded, shifted rectangular grid of at most ``n_pts`` points.

    Returns points shaped ``(n_g, n_b, 2)`` and the cell size. Cells are
    roughly square in (gamma, beta).
    """
    n_g = max(1, int(round(math.sqrt(n_pts * g_hi / b_hi))))
    n_b = max(1, n_pts // n_g)
    n_g = max(1, min(n_g, n_pts // n_b))
    cell = np.array([g_hi / n_g, b_hi / n_b])
    shift = rng.random(2) * cell
    gs = shift[0] + cell[0] * np.arange(n_g)
    bs = shift[1] + cell[1] * np.arange(n_b)
    pts = np.stack(np.meshgrid(gs, bs, indexing="ij"), axis=-1)
    return pts, cell


def _grid_peaks(values: np.ndarray, k: int) -> list[tuple[int, int]]:
    """Up to ``k`` grid cells, local maxima first (best first), then best remaining."""
    n_g, n_b = values.shape
    padded = np.pad(values, 1, constant_values=-np.inf)
    is_peak = np.ones_like(values, dtype=bool)
    for dg in (-1, 0, 1):
        for db in (-1, 0, 1):
            if dg or db:
                is_peak &= values >= padded[1 + dg : 1 + dg + n_g, 1 + db : 1 + db + n_b]
    cells = [(int(a), int(b)) for a, b in zip(*np.unravel_index(np.arange(values.size), values.shape))]
    cells.sort(key=lambda c: (not is_peak[c], -values[c], c))
    return cells[:k]


STRATEGIES = ("layerwise", "greedy", "joint")
DEFAULT_STARTS = 5
DEFAULT_BEAM = 4


def optimize(
    inst: KnapsackInstance,
    p: int,
    m: int,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    strategy: str = "layerwise",
    refine_evals: int = DEFAULT_REFINE_EVALS,
    starts: int = DEFAULT_STARTS,
    beam: int = DEFAULT_BEAM,
    _problem: _Problem | None = None,
) -> tuple[QaoaSchedule, int]:
    """Maximise the expectation over the angles; returns (schedule, evaluations).

    Every strategy is deterministic given ``seed`` and the budgets. Angles
    live in ``gamma in [0, 2pi)`` and ``beta in [0, m pi)``.

    ``layerwise`` (default)
        Layer ``k`` extends each of the ``beam`` best ``(k-1)``-layer
        schedules: the new pair is scanned over the origin plus a seeded
        shifted grid of ``budget - 1`` points, then bounded Nelder-Mead
        (``refine_evals * k`` evaluations) re-optimises all ``2k`` angles from
        the ``starts`` best distinct grid peaks. The ``beam`` best results
        carry over to the next layer.
    ``greedy``
        Beam of one, and refinement only moves the new pair; earlier layers
        stay frozen once chosen.
    ``joint``
        All ``2p`` angles at once: origin plus ``budget * p - 1`` seeded
        uniform samples, then Nelder-Mead from the ``starts`` best samples.
    """
    if p < 1 or m < 1:
        raise ValueError("need p >= 1 and m >= 1")
    if budget < 1 or refine_evals < 0 or starts < 1 or beam < 1:
        raise ValueError("optimizer budgets must be positive")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    prob = _problem or _Problem(inst)
    sector = prob.sector
    rng = np.random.default_rng(seed)
    b_hi = m * math.pi

    def evolve_batch(gammas, betas, psi=None):
        # gammas, betas: (batch, k)
        gammas, betas = np.atleast_2d(gammas), np.atleast_2d(betas)
        if psi is None:
            psi = sector.initial((gammas.shape[0],))
        for j in range(gammas.shape[1]):
            psi = sector.layer(psi, gammas[:, j], betas[:, j], m)
        return psi

    def full(x):
        k = len(x) // 2
        return float(sector.expectation(evolve_batch(x[None, :k], x[None, k:]))[0])

    def box(k):
        return np.zeros(2 * k), np.array([GAMMA_BOUND] * k + [b_hi] * k)

    evaluations = 0

    if strategy == "joint":
        lower, upper = box(p)
        obj = _Objective(full, lower, upper)
        pts = np.vstack([np.zeros(2 * p), rng.random((budget * p - 1, 2 * p)) * upper])
        pts = np.clip(pts, obj.lower, obj.upper)
        vals = sector.expectation(evolve_batch(pts[:, :p], pts[:, p:]))
        evaluations += len(pts)
        order = sorted(range(len(pts)), key=lambda j: (-vals[j], tuple(pts[j])))
        obj(pts[order[0]])
        step = upper / max(2, round(math.sqrt(budget)))
        for j in order[:starts]:
            obj.maximize_from(pts[j], step, refine_evals * p)
        evaluations += obj.evaluations
        x = obj.best_x
        return QaoaSchedule(p, m, tuple(x[:p]), tuple(x[p:])), evaluations

    if strategy == "greedy":
        beam = 1
    # each candidate: (expectation, angle vector [gammas..., betas...])
    candidates: list[tuple[float, np.ndarray]] = [(float(sector.expectation(sector.initial())), np.zeros(0))]
    for k in range(1, p + 1):
        children: list[tuple[float, np.ndarray]] = []
        lower, upper = box(k)
        for _, parent in candidates:
            pg, pb = parent[: k - 1], parent[k - 1 :]
            psi_prev = evolve_batch(pg[None, :], pb[None, :]) if k > 1 else sector.initial((1,))
            grid, cell = _grid(max(1, budget - 1), GAMMA_BOUND, b_hi, rng)
            flat = np.vstack([np.zeros((1, 2)), grid.reshape(-1, 2)])
            vals = sector.expectation(sector.layer(psi_prev, flat[:, 0], flat[:, 1], m))
            evaluations += len(flat)
            peaks = _grid_peaks(vals[1:].reshape(grid.shape[:2]), starts)
            seeds = [flat[0]] + [grid[c] for c in peaks]
            for j, new in enumerate(seeds):
                # seed 0 is the origin: keeps the parent itself in the running
                refine = j > 0
                if strategy == "greedy":
                    def pair(x, psi_prev=psi_prev):
                        return float(sector.expectation(sector.layer(psi_prev, x[0], x[1], m))[0])

                    obj = _Objective(pair, [0.0, 0.0], [GAMMA_BOUND, b_hi])
                    obj(new)
                    if refine:
                        obj.maximize_from(new, cell / 2, refine_evals)
                    x = np.concatenate([pg, obj.best_x[:1], pb, obj.best_x[1:]])
                else:
                    obj = _Objective(full, lower, upper)
                    x0 = np.concatenate([pg, new[:1], pb, new[1:]])
                    obj(x0)
                    if refine:
                        step = np.array([cell[0] / 2] * k + [cell[1] / 2] * k)
                        obj.maximize_from(x0, step, refine_evals * k)
                    x = obj.best_x
                evaluations += obj.evaluations
                children.append((obj.best_f, x))
        children.sort(key=lambda c: (-c[0], tuple(c[1])))
        candidates = []
        for f, x in children:
            if all(np.max(np.abs(x - y)) > 1e-6 for _, y in candidates):
                candidates.append((f, x))
            if len(candidates) == beam:
                break
    x = candidates[0][1]
    return QaoaSchedule(p, m, tuple(x[:p]), tuple(x[p:])), evaluations


@dataclass
class RunReport:
    instance: KnapsackInstance
    schedule: QaoaSchedule
    distribution: dict[str, float]
    expectation: float
    best_bits: tuple[int, ...]
    best_value: float
    best_probability: float
    bks: BksSolution
    ratio_best: float
    ratio_expectation: float
    evaluations: int
    seed: int
    shots: int
    budget: int
    strategy: str = "layerwise"
    wall_ms: float | None = field(default=None, compare=False)

    def to_dict(self, timing: bool = False) -> dict:
        d = {
            "instance": self.instance.to_dict(),
            "schedule": self.schedule.to_dict(),
            "seed": self.seed,
            "budget": self.budget,
            "shots": self.shots,
            "strategy": self.strategy,
            "evaluations": self.evaluations,
            "expectation": self.expectation,
            "bks": {"bits": self.bks.bitstring, "value": self.bks.value, "weight": self.bks.weight},
            "best_feasible": {
                "bits": format_bits(self.best_bits),
                "value": self.best_value,
                "probability": self.best_probability,
            },
            "ratio_best": self.ratio_best,
            "ratio_expectation": self.ratio_expectation,
            "distribution": self.distribution,
        }
        if timing:
            d["wall_ms"] = self.wall_ms
        return d

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(self.to_dict(timing=timing), indent=2) + "\n"


def best_feasible(probs: np.ndarray, inst: KnapsackInstance) -> tuple[tuple[int, ...], float]:
    """Most probable feasible choice index; near-ties go to the lexicographically smallest bits."""
    n = inst.n_items
    feas = np.flatnonzero(feasibility_table(inst))
    top = probs[feas].max()
    tied = [int(k) for k in feas if probs[k] >= top - PROB_TIE_TOL]
    bits = min(tuple((k >> i) & 1 for i in range(n)) for k in tied)
    k = sum(b << i for i, b in enumerate(bits))
    return bits, float(probs[k])


def distribution_dict(probs: np.ndarray, n: int) -> dict[str, float]:
    """Bitstring -> probability, most probable first, ties by bitstring."""
    items = [(format_bits([(k >> i) & 1 for i in range(n)]), float(pr)) for k, pr in enumerate(probs)]
    items.sort(key=lambda kv: (-kv[1], kv[0]))
    return dict(items)


def sample_probabilities(probs: np.ndarray, shots: int, seed: int) -> np.ndarray:
    """Empirical frequencies from ``shots`` multinomial draws (stream separate from the optimizer's)."""
    rng = np.random.default_rng([seed, 1])
    return rng.multinomial(shots, probs / probs.sum()) / shots


def run(
    inst: KnapsackInstance,
    p: int = 3,
    m: int = 3,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    shots: int = 0,
    strategy: str = "layerwise",
    backend: str = "circuit",
    refine_evals: int = DEFAULT_REFINE_EVALS,
    starts: int = DEFAULT_STARTS,
    beam: int = DEFAULT_BEAM,
) -> RunReport:
    """Optimise, evolve at the optimum with ``backend``, and score against the DP optimum."""
    if shots < 0:
        raise ValueError("shots must be >= 0")
    t0 = time.perf_counter()
    prob = _Problem(inst)
    schedule, evaluations = optimize(
        inst, p, m, budget=budget, seed=seed, strategy=strategy, refine_evals=refine_evals,
        starts=starts, beam=beam, _problem=prob
    )
    state = evolve(inst, prob.layout, schedule, backend=backend)
    probs = choice_probabilities(state, prob.layout)
    if shots > 0:
        probs = sample_probabilities(probs, shots, seed)
    bks = solve_dp(inst)
    bits, p_best = best_feasible(probs, inst)
    value = total_value(bits, inst)
    exp_val = float(probs @ prob.values)
    return RunReport(
        instance=inst,
        schedule=schedule,
        distribution=distribution_dict(probs, inst.n_items),
        expectation=exp_val,
        best_bits=bits,
        best_value=value,
        best_probability=p_best,
        bks=bks,
        ratio_best=approximation_ratio(value, bks.value),
        ratio_expectation=approximation_ratio(exp_val, bks.value),
        evaluations=evaluations,
        seed=seed,
        shots=shots,
        budget=budget,
        strategy=strategy,
        wall_ms=(time.perf_counter() - t0) * 1000.0,
    )
