"""Knapsack-encoded portfolio selection with a quantum-walk-mixer QAOA."""
from .driver import QaoaSchedule, RunReport, evolve, expectation, optimize, run
from .estimator import ExpectedReturnEncoder, QwmQaoaSolver, check_instance
from .knapsack import (
    BksSolution,
    KnapsackInstance,
    approximation_ratio,
    is_feasible,
    solve_brute_force,
    solve_dp,
    total_value,
    total_weight,
)
from .portfolio import ExpectedReturns, PriceSeries, encode_to_knapsack, expected_returns, fixture, load_prices

__all__ = [
    "BksSolution",
    "ExpectedReturnEncoder",
    "ExpectedReturns",
    "KnapsackInstance",
    "PriceSeries",
    "QaoaSchedule",
    "QwmQaoaSolver",
    "RunReport",
    "approximation_ratio",
    "check_instance",
    "encode_to_knapsack",
    "evolve",
    "expectation",
    "expected_returns",
    "fixture",
    "is_feasible",
    "load_prices",
    "optimize",
    "run",
    "solve_brute_force",
    "solve_dp",
    "total_value",
    "total_weight",
]
