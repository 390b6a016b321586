"""Index/stock study: d-sweeps, per-stock flows, cross-direction summary, histograms.

Naming: ``I`` is the index, ``S`` a stock.  ``te_index_to_stock`` is the
transfer entropy with the stock as target and the index as source.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from infoflow.entropy import EmbeddingSpec, transfer_entropy
from infoflow.errors import AlignmentError, InsufficientDataError, ParameterError
from infoflow.returns import (
    ReturnSeries,
    SymbolSeries,
    discretize,
    equiprobable_threshold,
    state_probabilities,
)
from infoflow.surrogates import (
    Direction,
    SurrogateConfig,
    SurrogateStats,
    replicate_rng,
    stream_key,
    surrogate_te,
)

log = logging.getLogger(__name__)

__all__ = [
    "FlowResult",
    "SweepResult",
    "CrossDirectionSummary",
    "Histogram",
    "DEFAULT_D_GRID",
    "FLOW_D",
    "pairwise_flow",
    "discretize_panel",
    "flows_at",
    "d_sweep",
    "state_probability_sweep",
    "cross_direction_summary",
    "te_histograms",
]

DEFAULT_D_GRID = tuple(round(0.0025 * i, 10) for i in range(25))
FLOW_D = 0.015


@dataclass(frozen=True)
class FlowResult:
    stock_id: str
    d: float | None
    te_index_to_stock: float
    te_stock_to_index: float
    surrogate_i_to_s: SurrogateStats
    surrogate_s_to_i: SurrogateStats
    sample_count: int

    @property
    def difference(self):
        return self.te_index_to_stock - self.te_stock_to_index


@dataclass(frozen=True)
class SweepResult:
    d_grid: tuple
    mean_te_i_to_s: tuple
    mean_te_s_to_i: tuple
    mean_shuffle_i_to_s: tuple
    mean_shuffle_s_to_i: tuple
    flows: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        n = len(self.d_grid)
        for name in ("mean_te_i_to_s", "mean_te_s_to_i", "mean_shuffle_i_to_s", "mean_shuffle_s_to_i"):
            if len(getattr(self, name)) != n:
                raise ParameterError(f"{name} does not match d_grid")

    def rows(self):
        return zip(self.d_grid, self.mean_te_i_to_s, self.mean_te_s_to_i,
                   self.mean_shuffle_i_to_s, self.mean_shuffle_s_to_i)


@dataclass(frozen=True)
class CrossDirectionSummary:
    pearson_r: float
    pearson_r_stderr: float
    n_pairs: int
    fraction_reverse_dominant: float
    mean_te_i_to_s: float
    mean_te_s_to_i: float
    top_k_i_to_s: tuple
    top_k_s_to_i: tuple


@dataclass(frozen=True)
class Histogram:
    """Fixed-width bins anchored at zero: bin ``b`` covers ``[b*w, (b+1)*w)``."""

    bin_width: float
    first_bin: int
    counts: np.ndarray

    @property
    def edges(self):
        return (self.first_bin + np.arange(self.counts.shape[0] + 1)) * self.bin_width

    def rows(self):
        edges = self.edges
        for b, c in enumerate(self.counts):
            yield float(edges[b]), float(edges[b + 1]), int(c)


def _check_aligned(index, stocks):
    for s in stocks:
        if len(s) != len(index):
            raise AlignmentError(
                f"{s.instrument_id} has {len(s)} samples, index {index.instrument_id} has {len(index)}"
            )
        if s.dates is not None and index.dates is not None and not np.array_equal(s.dates, index.dates):
            raise AlignmentError(f"{s.instrument_id} is not on the index's dates")


def _one_flow(index, stock, spec, cfg, d_tag):
    te_is = transfer_entropy(stock, index, spec)
    te_si = transfer_entropy(index, stock, spec)
    # I = stock, J = index in the surrogate call below
    sur_is = surrogate_te(stock, index, spec, Direction.J_to_I, cfg.n_surrogates, cfg.seed,
                          stream_key(stock.instrument_id, d_tag, 0), cfg.shuffle_both)
    sur_si = surrogate_te(stock, index, spec, Direction.I_to_J, cfg.n_surrogates, cfg.seed,
                          stream_key(stock.instrument_id, d_tag, 1), cfg.shuffle_both)
    return FlowResult(stock.instrument_id, stock.d, te_is.value, te_si.value, sur_is, sur_si,
                      te_is.sample_count)


def pairwise_flow(
    index: SymbolSeries,
    stocks: list[SymbolSeries],
    spec: EmbeddingSpec = EmbeddingSpec(),
    surrogate_cfg: SurrogateConfig = SurrogateConfig(),
    workers: int | None = None,
) -> list[FlowResult]:
    """Both flow directions and their shuffle baselines for each stock, in input order.

    Surrogate streams are keyed on the stock id and the stock's ``d``, so
    reordering stocks or changing ``workers`` does not change any value.
    """
    stocks = list(stocks)
    _check_aligned(index, stocks)
    if not stocks:
        return []

    def task(stock):
        tag = float(stock.d) if stock.d is not None else -1.0
        return _one_flow(index, stock, spec, surrogate_cfg, tag)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(task, stocks))
    return [task(s) for s in stocks]


def discretize_panel(index_returns: ReturnSeries, stock_returns: list[ReturnSeries], d):
    """Coarse-grain every series at one shared ``d``, or each at its own
    equiprobable threshold when ``d == "equiprobable"``."""
    if isinstance(d, str):
        if d != "equiprobable":
            raise ParameterError(f"unknown d mode {d!r}")
        return (
            discretize(index_returns, equiprobable_threshold(index_returns)),
            [discretize(s, equiprobable_threshold(s)) for s in stock_returns],
        )
    return discretize(index_returns, d), [discretize(s, d) for s in stock_returns]


def flows_at(index_returns, stock_returns, d=FLOW_D, spec=EmbeddingSpec(),
             surrogate_cfg=SurrogateConfig(), workers=None):
    """Per-stock flows after coarse-graining at ``d``.

    In ``"equiprobable"`` mode each FlowResult carries the stock's own ``d``.
    """
    index, stocks = discretize_panel(index_returns, stock_returns, d)
    return pairwise_flow(index, stocks, spec, surrogate_cfg, workers)


def _validate_grid(d_grid):
    grid = tuple(float(d) for d in d_grid)
    if not grid:
        raise ParameterError("d_grid is empty")
    if any(not d >= 0 for d in grid):
        raise ParameterError(f"d_grid contains a negative value: {grid}")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ParameterError("d_grid must be strictly increasing")
    return grid


def d_sweep(
    index_returns: ReturnSeries,
    stock_returns: list[ReturnSeries],
    d_grid=DEFAULT_D_GRID,
    spec: EmbeddingSpec = EmbeddingSpec(),
    surrogate_cfg: SurrogateConfig = SurrogateConfig(),
    workers: int | None = None,
) -> SweepResult:
    """Stock-averaged transfer entropy in both directions at each shared ``d``."""
    grid = _validate_grid(d_grid)
    if not stock_returns:
        raise InsufficientDataError("d_sweep needs at least one stock")
    cols = ([], [], [], [])
    all_flows = []
    for d in grid:
        flows = flows_at(index_returns, stock_returns, d, spec, surrogate_cfg, workers)
        all_flows.append(tuple(flows))
        cols[0].append(float(np.mean([f.te_index_to_stock for f in flows])))
        cols[1].append(float(np.mean([f.te_stock_to_index for f in flows])))
        cols[2].append(float(np.mean([f.surrogate_i_to_s.mean for f in flows])))
        cols[3].append(float(np.mean([f.surrogate_s_to_i.mean for f in flows])))
        log.debug("d=%g: mean T(I->S)=%.6g, mean T(S->I)=%.6g", d, cols[0][-1], cols[1][-1])
    return SweepResult(grid, *(tuple(c) for c in cols), flows=tuple(all_flows))


def state_probability_sweep(series: list[ReturnSeries], d_grid=DEFAULT_D_GRID):
    """``{instrument_id: array (len(d_grid), 3)}`` of state probabilities."""
    grid = _validate_grid(d_grid)
    out = {}
    for s in series:
        out[s.instrument_id] = np.array(
            [state_probabilities(discretize(s, d)).probabilities for d in grid]
        )
    return out


def _pearson(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    den = np.sqrt(np.sum(dx * dx) * np.sum(dy * dy))
    if den == 0:
        return float("nan")
    return float(np.clip(np.sum(dx * dy) / den, -1.0, 1.0))


def _top_k(flows, attr, k):
    ranked = sorted(flows, key=lambda f: (-getattr(f, attr), f.stock_id))
    return tuple((f.stock_id, float(getattr(f, attr))) for f in ranked[:k])


def cross_direction_summary(
    flows: list[FlowResult], k_top: int = 10, n_bootstrap: int = 1000, seed: int = 0
) -> CrossDirectionSummary:
    """Correlation between the two directions across stocks, plus rankings.

    ``pearson_r_stderr`` is the standard deviation of ``r`` over ``n_bootstrap``
    resamples of stocks (resamples with zero variance are skipped).
    """
    if len(flows) < 2:
        raise InsufficientDataError(f"need at least 2 flows for a correlation, got {len(flows)}")
    x = np.array([f.te_index_to_stock for f in flows])
    y = np.array([f.te_stock_to_index for f in flows])
    r = _pearson(x, y)

    stderr = float("nan")
    if n_bootstrap > 0:
        rng = replicate_rng(seed, stream_key("bootstrap"))
        idx = rng.integers(0, len(flows), size=(n_bootstrap, len(flows)))
        rs = np.array([_pearson(x[row], y[row]) for row in idx])
        rs = rs[np.isfinite(rs)]
        if rs.size > 1:
            stderr = float(rs.std(ddof=1))

    return CrossDirectionSummary(
        pearson_r=r,
        pearson_r_stderr=stderr,
        n_pairs=len(flows),
        fraction_reverse_dominant=float(np.mean(y > x)),
        mean_te_i_to_s=float(x.mean()),
        mean_te_s_to_i=float(y.mean()),
        top_k_i_to_s=_top_k(flows, "te_index_to_stock", k_top),
        top_k_s_to_i=_top_k(flows, "te_stock_to_index", k_top),
    )


def _histogram(values, bin_width):
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return Histogram(bin_width, 0, np.zeros(0, dtype=np.int64))
    bins = np.floor(values / bin_width).astype(np.int64)
    lo = int(bins.min())
    return Histogram(bin_width, lo, np.bincount(bins - lo))


def te_histograms(flows: list[FlowResult], bin_width: float) -> dict[str, Histogram]:
    """Histograms of ``T(I->S)``, ``T(S->I)`` and their difference."""
    if not bin_width > 0:
        raise ParameterError(f"bin_width must be positive, got {bin_width}")
    return {
        "i_to_s": _histogram([f.te_index_to_stock for f in flows], bin_width),
        "s_to_i": _histogram([f.te_stock_to_index for f in flows], bin_width),
        "difference": _histogram([f.difference for f in flows], bin_width),
    }
