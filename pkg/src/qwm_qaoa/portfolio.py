"""Price ingestion, expected returns and the portfolio-to-knapsack encoding."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from os import PathLike
from typing import Sequence

import numpy as np
import pandas as pd

from .knapsack import KnapsackInstance

TRADING_DAYS = 252


class PriceDataError(ValueError):
    """Raised for malformed or unusable price files."""


@dataclass(frozen=True)
class PriceSeries:
    tickers: tuple[str, ...]
    dates: np.ndarray  # datetime64[D], strictly increasing
    closes: np.ndarray  # (n_dates, n_tickers)

    def __post_init__(self):
        closes = np.asarray(self.closes, dtype=float)
        if closes.ndim != 2:
            raise PriceDataError("closes must be a 2-d array")
        if closes.shape[1] != len(self.tickers):
            raise PriceDataError("one close column per ticker required")
        if closes.shape[0] != len(self.dates):
            raise PriceDataError("one close row per date required")
        if closes.shape[0] < 2:
            raise PriceDataError("need at least two price rows")
        if not np.all(np.isfinite(closes)) or np.any(closes <= 0):
            raise PriceDataError("non-positive price in series")
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        if np.any(np.diff(dates) <= np.timedelta64(0, "D")):
            raise PriceDataError("dates must be strictly increasing")
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "closes", closes)


@dataclass(frozen=True)
class ExpectedReturns:
    tickers: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.tickers) != len(self.values):
            raise ValueError("tickers and values differ in length")
        if not all(np.isfinite(self.values)):
            raise ValueError("expected returns must be finite")
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


def load_prices(
    path: str | PathLike,
    tickers: Sequence[str],
    start: str | None = None,
    end: str | None = None,
) -> PriceSeries:
    """Read a ``date,<TICKER>,...`` CSV restricted to ``tickers`` (in that order).

    ``start``/``end`` are inclusive ISO dates. Rows are used as-is; gaps in
    trading days are not filled.
    """
    try:
        frame = pd.read_csv(path, encoding="utf-8")
    except FileNotFoundError:
        raise
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise PriceDataError(f"cannot parse price file {path}: {exc}") from exc
    if "date" not in frame.columns:
        raise PriceDataError("price file needs a 'date' column")
    missing = [t for t in tickers if t not in frame.columns]
    if missing:
        raise PriceDataError(f"missing ticker column(s): {', '.join(missing)}")
    try:
        dates = pd.to_datetime(frame["date"], format="ISO8601")
    except (ValueError, TypeError) as exc:
        raise PriceDataError(f"bad date in price file: {exc}") from exc
    if not dates.is_monotonic_increasing or dates.duplicated().any():
        raise PriceDataError("dates must be strictly increasing")

    keep = np.ones(len(frame), dtype=bool)
    if start is not None:
        keep &= (dates >= pd.Timestamp(start)).to_numpy()
    if end is not None:
        keep &= (dates <= pd.Timestamp(end)).to_numpy()
    closes = frame.loc[keep, list(tickers)]
    try:
        closes = closes.astype(float).to_numpy()
    except ValueError as exc:
        raise PriceDataError(f"non-numeric price: {exc}") from exc
    if np.isnan(closes).any():
        raise PriceDataError("missing price value")
    if (closes <= 0).any():
        raise PriceDataError("non-positive price in series")
    return PriceSeries(
        tickers=tuple(tickers),
        dates=dates[keep].to_numpy().astype("datetime64[D]"),
        closes=closes,
    )


def expected_returns(prices: PriceSeries) -> ExpectedReturns:
    """Annualised arithmetic mean of daily simple returns."""
    closes = prices.closes
    if closes.shape[0] < 2:
        raise PriceDataError("need at least two price rows")
    daily = closes[1:] / closes[:-1] - 1.0
    return ExpectedReturns(prices.tickers, tuple(TRADING_DAYS * daily.mean(axis=0)))


def encode_to_knapsack(er: ExpectedReturns, name: str | None = None) -> KnapsackInstance:
    """Unit weights, capacity of half the asset count (rounded down)."""
    n = len(er.values)
    if n < 1:
        raise ValueError("need at least one asset")
    return KnapsackInstance(
        values=er.values,
        weights=(1,) * n,
        capacity=n // 2,
        tickers=er.tickers,
        name=name,
    )


@dataclass(frozen=True)
class Fixture:
    """One of the bundled reference portfolios with its published annotations."""

    name: str
    instance: KnapsackInstance
    published_bks: str
    published_qubits: int

    @property
    def expected_returns(self) -> ExpectedReturns:
        return ExpectedReturns(self.instance.tickers, self.instance.values)


def load_fixtures() -> dict[str, Fixture]:
    raw = json.loads(resources.files("qwm_qaoa.data").joinpath("fixtures.json").read_text("utf-8"))
    out = {}
    for entry in raw["instances"]:
        inst = KnapsackInstance(
            values=tuple(entry["values"]),
            weights=tuple(entry["weights"]),
            capacity=entry["capacity"],
            tickers=tuple(entry["tickers"]),
            name=entry["name"],
        )
        out[entry["name"]] = Fixture(entry["name"], inst, entry["bks"], entry["qubits"])
    return out


def fixture(name: str) -> KnapsackInstance:
    fixtures = load_fixtures()
    if name not in fixtures:
        raise KeyError(f"unknown fixture {name!r}; choose from {', '.join(fixtures)}")
    return fixtures[name].instance


def sample_prices_path():
    """Path to the bundled synthetic price CSV (MSFT, AAPL, GOOGL, 2018-2022)."""
    return resources.files("qwm_qaoa.data").joinpath("sample_prices.csv")
