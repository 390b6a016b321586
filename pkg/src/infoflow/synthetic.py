"""Planted-truth processes for validating the estimator and the pipeline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from infoflow.errors import ParameterError
from infoflow.returns import ReturnSeries, SymbolSeries
from infoflow.surrogates import replicate_rng

__all__ = [
    "NoisyCopySpec",
    "ToyMarketSpec",
    "binary_entropy",
    "analytic_noisy_copy_te",
    "noisy_copy_joint",
    "gen_noisy_copy",
    "gen_toy_market",
    "stock_couplings",
]

FIXTURE_START = np.datetime64("2000-01-03", "D")


@dataclass(frozen=True)
class NoisyCopySpec:
    epsilon: float
    length: int
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 0.5:
            raise ParameterError(f"epsilon must lie in [0, 0.5], got {self.epsilon}")
        if self.length < 1:
            raise ParameterError("length must be positive")


@dataclass(frozen=True)
class ToyMarketSpec:
    """Stocks that copy the sign of yesterday's index return.

    ``coupling`` is the mean per-day probability that a stock's return takes
    the sign of the previous index return.  Each stock gets its own
    probability ``coupling * U(1 - coupling_spread, 1 + coupling_spread)``,
    capped at 1, so some stocks are more tightly tied to the index than
    others.  The index is the driver plus the equal-weighted average of
    same-day stock returns.
    """

    n_stocks: int = 20
    coupling: float = 0.8
    idiosyncratic_vol: float = 0.02
    length: int = 10_000
    seed: int = 0
    coupling_spread: float = 0.25
    driver_vol: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.coupling <= 1.0:
            raise ParameterError(f"coupling must lie in [0, 1], got {self.coupling}")
        if not 0.0 <= self.coupling_spread <= 1.0:
            raise ParameterError(f"coupling_spread must lie in [0, 1], got {self.coupling_spread}")
        if self.n_stocks < 1 or self.length < 2:
            raise ParameterError("n_stocks must be >= 1 and length >= 2")
        if not self.idiosyncratic_vol > 0:
            raise ParameterError("idiosyncratic_vol must be positive")

    @property
    def driver_scale(self):
        return self.idiosyncratic_vol / 2 if self.driver_vol is None else self.driver_vol


def binary_entropy(eps):
    if eps <= 0.0 or eps >= 1.0:
        return 0.0
    return float(-eps * np.log2(eps) - (1 - eps) * np.log2(1 - eps))


def analytic_noisy_copy_te(epsilon: float) -> float:
    """Flow from source to target for the noisy copy, ``1 - H_b(epsilon)``."""
    if not 0.0 <= epsilon <= 0.5:
        raise ParameterError(f"epsilon must lie in [0, 0.5], got {epsilon}")
    return 1.0 - binary_entropy(epsilon)


def noisy_copy_joint(epsilon: float) -> np.ndarray:
    """Stationary ``p[i_{t+1}, i_t, j_t]`` of the noisy copy with ``k = l = 1``.

    ``i_t`` and ``j_t`` are independent fair bits and ``i_{t+1}`` is ``j_t``
    flipped with probability ``epsilon``.
    """
    p = np.zeros((2, 2, 2))
    for n in range(2):
        for i in range(2):
            for j in range(2):
                p[n, i, j] = 0.25 * ((1 - epsilon) if n == j else epsilon)
    return p


def gen_noisy_copy(spec: NoisyCopySpec) -> tuple[SymbolSeries, SymbolSeries]:
    """Return ``(J, I)`` with ``I[t+1] = J[t] xor flip``, flips i.i.d. ``epsilon``."""
    rng = replicate_rng(spec.seed, (0x6E6F6973,))
    n = spec.length
    j = rng.integers(0, 2, size=n)
    flips = rng.random(n) < spec.epsilon
    i = np.empty(n, dtype=np.int64)
    i[0] = rng.integers(0, 2)
    i[1:] = j[:-1] ^ flips[:-1]
    return SymbolSeries("J", j, 2), SymbolSeries("I", i, 2)


def stock_couplings(spec: ToyMarketSpec) -> np.ndarray:
    """Per-stock copy probabilities used by :func:`gen_toy_market`."""
    lo, hi = 1.0 - spec.coupling_spread, 1.0 + spec.coupling_spread
    return np.array([
        min(1.0, spec.coupling * replicate_rng(spec.seed, (0x746F79, 2, s)).uniform(lo, hi))
        for s in range(spec.n_stocks)
    ])


def gen_toy_market(spec: ToyMarketSpec) -> tuple[ReturnSeries, list[ReturnSeries]]:
    """Index and stock log returns with planted index-to-stock flow.

    Stock ``s`` on day ``t + 1``: draw ``z ~ N(0, vol)``; with probability
    ``c_s`` (see :func:`stock_couplings`) return ``sign(index_t) * |z|``,
    otherwise ``z``.  The index on day ``t`` is ``g_t`` plus the mean stock
    return of day ``t`` with ``g_t ~ N(0, driver_scale)``.  Every stock draws
    from its own stream.
    """
    n, m = spec.length, spec.n_stocks
    vol = spec.idiosyncratic_vol
    couplings = stock_couplings(spec)
    driver = replicate_rng(spec.seed, (0x746F79, 0)).normal(0.0, spec.driver_scale, n)
    noise = np.empty((m, n))
    copy = np.empty((m, n), dtype=bool)
    for s in range(m):
        rng = replicate_rng(spec.seed, (0x746F79, 1, s))
        noise[s] = rng.normal(0.0, vol, n)
        copy[s] = rng.random(n) < couplings[s]

    stocks = noise.copy()
    index = np.empty(n)
    index[0] = driver[0] + stocks[:, 0].mean()
    for t in range(1, n):
        sign = 1.0 if index[t - 1] >= 0 else -1.0
        col = copy[:, t]
        stocks[col, t] = sign * np.abs(noise[col, t])
        index[t] = driver[t] + stocks[:, t].mean()

    dates = np.busday_offset(FIXTURE_START, np.arange(1, n + 1), roll="forward")
    width = max(2, len(str(m - 1)))
    index_series = ReturnSeries("INDEX", index, dates)
    stock_series = [ReturnSeries(f"S{s:0{width}d}", stocks[s], dates) for s in range(m)]
    return index_series, stock_series
