"""scikit-learn style front end.

``ExpectedReturnEncoder`` turns a price table into a knapsack instance and
``QwmQaoaSolver`` optimises the QWM-QAOA angles for it, so the two chain in a
:class:`sklearn.pipeline.Pipeline`::

    Pipeline([("encode", ExpectedReturnEncoder()), ("qaoa", QwmQaoaSolver(p=3, m=3))])
"""
from __future__ import annotations

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from .driver import DEFAULT_BEAM, DEFAULT_BUDGET, DEFAULT_REFINE_EVALS, DEFAULT_STARTS, STRATEGIES, run
from .knapsack import KnapsackInstance
from .portfolio import PriceSeries, encode_to_knapsack, expected_returns


def check_instance(X, weights=None, capacity=None) -> KnapsackInstance:
    """Coerce ``X`` into a :class:`KnapsackInstance`.

    ``X`` may already be an instance, a dict in the instance JSON layout, or a
    1-d array of item values. For raw values, weights default to 1 and the
    capacity to half the item count (rounded down).
    """
    if isinstance(X, KnapsackInstance):
        if weights is not None or capacity is not None:
            raise ValueError("weights/capacity cannot override a KnapsackInstance")
        return X
    if isinstance(X, dict):
        return KnapsackInstance.from_dict(X)
    values = check_array(X, ensure_2d=False, dtype=float)
    if values.ndim != 1:
        raise ValueError(f"expected a 1-d array of item values, got shape {values.shape}")
    n = values.shape[0]
    if weights is None:
        weights = np.ones(n, dtype=int)
    weights = np.asarray(weights)
    if capacity is None:
        capacity = n // 2
    return KnapsackInstance(tuple(values), tuple(int(w) for w in weights), int(capacity))


def _as_price_series(X) -> PriceSeries:
    if isinstance(X, PriceSeries):
        return X
    if isinstance(X, pd.DataFrame):
        frame = X
        if "date" in frame.columns:
            frame = frame.set_index("date")
        dates = pd.to_datetime(frame.index).to_numpy().astype("datetime64[D]")
        return PriceSeries(tuple(str(c) for c in frame.columns), dates, frame.to_numpy(dtype=float))
    raise TypeError(f"expected a PriceSeries or DataFrame of closes, got {type(X).__name__}")


class ExpectedReturnEncoder(TransformerMixin, BaseEstimator):
    """Prices -> knapsack instance (annualised mean returns, unit weights, capacity N//2).

    Stateless; ``fit`` only validates its input.
    """

    def __init__(self, start=None, end=None):
        self.start = start
        self.end = end

    def fit(self, X, y=None):
        prices = self._window(_as_price_series(X))
        self.tickers_ = prices.tickers
        self.n_features_in_ = len(prices.tickers)
        return self

    def transform(self, X) -> KnapsackInstance:
        return encode_to_knapsack(expected_returns(self._window(_as_price_series(X))))

    def _window(self, prices: PriceSeries) -> PriceSeries:
        keep = np.ones(len(prices.dates), dtype=bool)
        if self.start is not None:
            keep &= prices.dates >= np.datetime64(self.start, "D")
        if self.end is not None:
            keep &= prices.dates <= np.datetime64(self.end, "D")
        return PriceSeries(prices.tickers, prices.dates[keep], prices.closes[keep])


class QwmQaoaSolver(BaseEstimator):
    """Quantum-walk-mixer QAOA for a single 0-1 knapsack instance.

    ``fit`` searches the angles and stores the run report; ``predict``
    returns the most probable feasible selection as a 0/1 array and
    ``score`` its approximation ratio against the exact optimum.

    Attributes set by ``fit``: ``instance_``, ``report_``, ``schedule_``,
    ``best_bits_``, ``bks_``.
    """

    def __init__(
        self,
        p=3,
        m=3,
        budget=DEFAULT_BUDGET,
        seed=0,
        shots=0,
        strategy="layerwise",
        backend="circuit",
        refine_evals=DEFAULT_REFINE_EVALS,
        starts=DEFAULT_STARTS,
        beam=DEFAULT_BEAM,
    ):
        self.p = p
        self.m = m
        self.budget = budget
        self.seed = seed
        self.shots = shots
        self.strategy = strategy
        self.backend = backend
        self.refine_evals = refine_evals
        self.starts = starts
        self.beam = beam

    def fit(self, X, y=None, weights=None, capacity=None):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        inst = check_instance(X, weights, capacity)
        report = run(
            inst,
            p=self.p,
            m=self.m,
            budget=self.budget,
            seed=self.seed,
            shots=self.shots,
            strategy=self.strategy,
            backend=self.backend,
            refine_evals=self.refine_evals,
            starts=self.starts,
            beam=self.beam,
        )
        self.instance_ = inst
        self.report_ = report
        self.schedule_ = report.schedule
        self.best_bits_ = np.array(report.best_bits, dtype=int)
        self.bks_ = report.bks
        return self

    def _check_same(self, X):
        check_is_fitted(self, "report_")
        if X is not None and check_instance(X) != self.instance_:
            raise ValueError("solver was fitted on a different instance; refit instead")

    def predict(self, X=None) -> np.ndarray:
        self._check_same(X)
        return self.best_bits_.copy()

    def predict_proba(self, X=None) -> np.ndarray:
        """Probability of every selection, indexed by ``sum_i x_i 2^i``."""
        self._check_same(X)
        n = self.instance_.n_items
        probs = np.zeros(2**n)
        for bits, pr in self.report_.distribution.items():
            probs[sum(int(b) << i for i, b in enumerate(bits))] = pr
        return probs

    def score(self, X=None, y=None) -> float:
        self._check_same(X)
        return self.report_.ratio_best
