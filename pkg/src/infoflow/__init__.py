"""Directed information flow between a composite index and individual stocks.

Log returns are coarse-grained into decrease / intermediate / increase
states, and plug-in transfer entropy is measured in both directions for
every index/stock pair, against shuffle-surrogate baselines.
"""

__version__ = "0.1.0"

from infoflow._backend import BACKEND
from infoflow.entropy import (
    EmbeddingCountTable,
    EmbeddingSpec,
    TransferEntropyValue,
    build_count_table,
    conditional_entropy_hI,
    conditional_entropy_hIJ,
    exact_transfer_entropy,
    transfer_entropy,
)
from infoflow.errors import InfoFlowError
from infoflow.pipeline import (
    CrossDirectionSummary,
    FlowResult,
    SweepResult,
    cross_direction_summary,
    d_sweep,
    flows_at,
    pairwise_flow,
    te_histograms,
)
from infoflow.returns import (
    PriceSeries,
    ReturnSeries,
    StateDistribution,
    SymbolSeries,
    discretize,
    equiprobable_threshold,
    log_returns,
    state_probabilities,
)
from infoflow.surrogates import Direction, SurrogateConfig, SurrogateStats, shuffle_series, surrogate_te
from infoflow.synthetic import (
    NoisyCopySpec,
    ToyMarketSpec,
    analytic_noisy_copy_te,
    gen_noisy_copy,
    gen_toy_market,
)
