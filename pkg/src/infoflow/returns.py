"""Log returns and three-state coarse graining."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from infoflow._backend import kernels
from infoflow.errors import (
    DegenerateInputError,
    LengthError,
    NonPositivePriceError,
    ParameterError,
)

__all__ = [
    "PriceSeries",
    "ReturnSeries",
    "SymbolSeries",
    "StateDistribution",
    "log_returns",
    "discretize",
    "state_probabilities",
    "equiprobable_threshold",
]


def _as_dates(dates, n):
    if dates is None:
        return None
    dates = np.asarray(dates, dtype="datetime64[D]")
    if dates.shape != (n,):
        raise LengthError(f"{dates.shape[0]} dates for {n} values")
    return dates


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Daily closes for one instrument, dates strictly increasing."""

    instrument_id: str
    dates: np.ndarray | None
    closes: np.ndarray

    def __post_init__(self):
        closes = np.asarray(self.closes, dtype=np.float64)
        object.__setattr__(self, "closes", closes)
        dates = _as_dates(self.dates, closes.shape[0])
        object.__setattr__(self, "dates", dates)
        if dates is not None and dates.size > 1 and not np.all(dates[1:] > dates[:-1]):
            raise ParameterError(f"{self.instrument_id}: dates must be strictly increasing")

    def __len__(self):
        return self.closes.shape[0]


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    instrument_id: str
    values: np.ndarray
    dates: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dates", _as_dates(self.dates, values.shape[0]))
        if not np.all(np.isfinite(values)):
            raise ParameterError(f"{self.instrument_id}: returns must be finite")

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class SymbolSeries:
    """Discrete states in ``[0, alphabet_size)``.

    ``d`` records the threshold that produced the states (``None`` for
    series that were not made by :func:`discretize`).
    """

    instrument_id: str
    states: np.ndarray
    alphabet_size: int = 3
    d: float | None = None
    dates: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        states = np.asarray(self.states)
        if states.ndim != 1:
            raise ParameterError("states must be one-dimensional")
        if self.alphabet_size < 1:
            raise ParameterError("alphabet_size must be positive")
        if states.size and (states.min() < 0 or states.max() >= self.alphabet_size):
            raise ParameterError(
                f"{self.instrument_id}: states outside [0, {self.alphabet_size})"
            )
        object.__setattr__(self, "states", states.astype(np.int64, copy=False))
        object.__setattr__(self, "dates", _as_dates(self.dates, states.shape[0]))

    def __len__(self):
        return self.states.shape[0]

    def with_states(self, states):
        return SymbolSeries(self.instrument_id, states, self.alphabet_size, self.d, self.dates)


@dataclass(frozen=True)
class StateDistribution:
    probabilities: tuple

    def __getitem__(self, state):
        return self.probabilities[state]

    def __len__(self):
        return len(self.probabilities)


def log_returns(prices: PriceSeries) -> ReturnSeries:
    closes = prices.closes
    if closes.shape[0] < 2:
        raise LengthError(f"{prices.instrument_id}: need at least 2 prices, got {closes.shape[0]}")
    bad = np.flatnonzero(~(closes > 0))
    if bad.size:
        i = bad[0]
        date = prices.dates[i] if prices.dates is not None else f"position {i}"
        raise NonPositivePriceError(date, closes[i])
    dates = prices.dates[1:] if prices.dates is not None else None
    return ReturnSeries(prices.instrument_id, np.diff(np.log(closes)), dates)


def discretize(returns: ReturnSeries, d: float) -> SymbolSeries:
    """Map each return to decrease (0), intermediate (1) or increase (2).

    ``x <= -d/2`` is a decrease and ``x >= d/2`` an increase; the decrease
    branch wins at ``x == 0`` when ``d == 0``.
    """
    d = float(d)
    if not d >= 0:
        raise ParameterError(f"threshold d must be nonnegative, got {d}")
    states = kernels.discretize(returns.values, d)
    return SymbolSeries(returns.instrument_id, states, 3, d, returns.dates)


def state_probabilities(symbols: SymbolSeries) -> StateDistribution:
    n = len(symbols)
    if n == 0:
        raise LengthError(f"{symbols.instrument_id}: empty symbol series")
    counts = np.bincount(symbols.states, minlength=symbols.alphabet_size)
    return StateDistribution(tuple(float(c) / n for c in counts))


def _band_probabilities(sorted_x, half_widths):
    n = sorted_x.shape[0]
    p0 = np.searchsorted(sorted_x, -half_widths, side="right") / n
    p2 = (n - np.searchsorted(sorted_x, half_widths, side="left")) / n
    return p0, 1.0 - p0 - p2, p2


def equiprobable_threshold(returns: ReturnSeries) -> float:
    """Threshold at which the three states are closest to equally likely.

    Candidates are ``2|x|`` for every observed return; the winner minimises
    the largest deviation of a state probability from 1/3, smallest ``d``
    on ties.
    """
    x = np.sort(returns.values)
    if np.unique(x).shape[0] < 3:
        raise DegenerateInputError(
            f"{returns.instrument_id}: need at least 3 distinct returns"
        )
    half = np.unique(np.abs(x))
    p0, p1, p2 = _band_probabilities(x, half)
    dev = np.max(np.abs(np.stack([p0, p1, p2]) - 1.0 / 3.0), axis=0)
    # d == 0 puts zero returns in state 0; the vectorised band count does not
    if half[0] == 0.0:
        s = kernels.discretize(x, 0.0)
        probs = np.bincount(s, minlength=3) / x.shape[0]
        dev[0] = np.max(np.abs(probs - 1.0 / 3.0))
    return float(2.0 * half[int(np.argmin(dev))])
