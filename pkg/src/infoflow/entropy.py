"""Plug-in transfer entropy over delay embeddings of discrete series.

All quantities are in bits.  ``transfer_entropy(I, J, spec)`` measures flow
from the source ``J`` into the target ``I``: how much the last ``l`` states
of ``J`` sharpen the prediction of ``I``'s next state beyond what ``I``'s own
last ``k`` states give.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from infoflow._backend import kernels
from infoflow.errors import (
    AlignmentError,
    InsufficientDataError,
    NormalizationError,
    ParameterError,
)
from infoflow.returns import SymbolSeries

__all__ = [
    "EmbeddingSpec",
    "EmbeddingCountTable",
    "TransferEntropyValue",
    "build_count_table",
    "transfer_entropy",
    "conditional_entropy_hI",
    "conditional_entropy_hIJ",
    "exact_transfer_entropy",
]

# dense tables beyond this many cells are refused rather than allocated
MAX_TABLE_CELLS = 1 << 26


@dataclass(frozen=True)
class EmbeddingSpec:
    """History lengths: ``k`` for the target, ``l`` for the source."""

    k: int = 1
    l: int = 1

    def __post_init__(self):
        if int(self.k) != self.k or int(self.l) != self.l or self.k < 1 or self.l < 1:
            raise ParameterError(f"k and l must be positive integers, got k={self.k}, l={self.l}")

    @property
    def window(self):
        return max(self.k, self.l)


@dataclass(frozen=True, eq=False)
class EmbeddingCountTable:
    """Exact transition counts, stored dense as ``counts[next, i_hist, j_hist]``.

    History axes are flattened base-``alphabet`` codes of ``(s_t, s_{t-1}, ...)``
    with the most recent state most significant.
    """

    counts: np.ndarray
    k: int
    l: int
    alphabet_size: int
    source_alphabet_size: int

    @property
    def total(self):
        return int(self.counts.sum())

    def decode_history(self, code, depth, alphabet):
        return tuple(int(v) for v in np.unravel_index(code, (alphabet,) * depth))

    def items(self):
        """Yield ``((next, i_history, j_history), count)`` for nonzero cells."""
        for n, ih, jh in zip(*np.nonzero(self.counts)):
            key = (
                int(n),
                self.decode_history(ih, self.k, self.alphabet_size),
                self.decode_history(jh, self.l, self.source_alphabet_size),
            )
            yield key, int(self.counts[n, ih, jh])

    def as_dict(self):
        return dict(self.items())

    def marginal_target(self):
        """Counts of ``(next, i_hist)`` over the same transition window."""
        return self.counts.sum(axis=2)


@dataclass(frozen=True)
class TransferEntropyValue:
    value: float
    h_I: float
    h_IJ: float
    sample_count: int

    def __float__(self):
        return self.value


def _check_pair(I, J, spec):
    if len(I) != len(J):
        raise AlignmentError(
            f"length mismatch: {I.instrument_id} has {len(I)}, {J.instrument_id} has {len(J)}"
        )
    if I.dates is not None and J.dates is not None and not np.array_equal(I.dates, J.dates):
        raise AlignmentError(f"{I.instrument_id} and {J.instrument_id} are on different dates")
    if len(I) <= spec.window + 1:
        raise InsufficientDataError(
            f"need more than {spec.window + 1} samples for k={spec.k}, l={spec.l}, got {len(I)}"
        )


def _dense_size(a_i, a_j, spec):
    size = a_i ** (spec.k + 1) * a_j ** spec.l
    if size > MAX_TABLE_CELLS:
        raise ParameterError(f"count table would need {size} cells")
    return size


def build_count_table(I: SymbolSeries, J: SymbolSeries, spec: EmbeddingSpec) -> EmbeddingCountTable:
    """Count ``(i_{t+1}, i_t^(k), j_t^(l))`` for ``t`` from ``max(k, l) - 1`` to ``L - 2``."""
    _check_pair(I, J, spec)
    _dense_size(I.alphabet_size, J.alphabet_size, spec)
    counts = kernels.count_transitions(
        I.states, J.states, spec.k, spec.l, I.alphabet_size, J.alphabet_size
    )
    return EmbeddingCountTable(counts, spec.k, spec.l, I.alphabet_size, J.alphabet_size)


def entropies_from_table(table: EmbeddingCountTable) -> TransferEntropyValue:
    te, h_i, h_ij = kernels.entropies(table.counts)
    return TransferEntropyValue(te, h_i, h_ij, table.total)


def transfer_entropy(I: SymbolSeries, J: SymbolSeries, spec: EmbeddingSpec) -> TransferEntropyValue:
    """Plug-in estimate of the flow from ``J`` into ``I``.

    ``h_I`` and ``h_IJ`` on the result come from the same count table, so
    ``value == h_I - h_IJ`` up to rounding.
    """
    return entropies_from_table(build_count_table(I, J, spec))


def conditional_entropy_hI(I: SymbolSeries, spec: EmbeddingSpec) -> float:
    """Entropy of the next state of ``I`` given its last ``k`` states.

    Counts over ``I``'s own window (``t >= k - 1``), which is longer than the
    paired window when ``l > k``.  Use ``transfer_entropy(...).h_I`` for the
    value on the shared window.
    """
    if len(I) <= spec.k + 1:
        raise InsufficientDataError(f"need more than {spec.k + 1} samples, got {len(I)}")
    _dense_size(I.alphabet_size, 1, EmbeddingSpec(spec.k, 1))
    blank = np.zeros(len(I), dtype=np.int64)
    counts = kernels.count_transitions(I.states, blank, spec.k, 1, I.alphabet_size, 1)
    return kernels.entropies(counts)[1]


def conditional_entropy_hIJ(I: SymbolSeries, J: SymbolSeries, spec: EmbeddingSpec) -> float:
    return transfer_entropy(I, J, spec).h_IJ


def _table_from_mapping(joint):
    keys = list(joint)
    n_next = 1 + max(key[0] for key in keys)
    k = len(keys[0][1])
    l = len(keys[0][2])
    a_i = max(n_next, 1 + max(max(key[1]) for key in keys))
    a_j = 1 + max(max(key[2]) for key in keys)
    table = np.zeros((a_i, a_i ** k, a_j ** l))
    for (n, ih, jh), p in joint.items():
        table[n, np.ravel_multi_index(ih, (a_i,) * k), np.ravel_multi_index(jh, (a_j,) * l)] += p
    return table


def exact_transfer_entropy(joint) -> float:
    """Transfer entropy of an explicit joint distribution.

    ``joint`` is either an array ``p[next, i_hist, j_hist]`` or a mapping
    from ``(next, i_history_tuple, j_history_tuple)`` to probability.
    """
    p = _table_from_mapping(joint) if isinstance(joint, Mapping) else np.asarray(joint, dtype=np.float64)
    if p.ndim != 3:
        raise ParameterError("joint table must have axes (next, i_hist, j_hist)")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise NormalizationError(f"joint probabilities must be nonnegative and sum to 1, sum={p.sum()!r}")
    p_ij = p.sum(axis=0)
    p_ni = p.sum(axis=2)
    p_i = p_ni.sum(axis=0)
    total = 0.0
    for n, i, j in zip(*np.nonzero(p > 0)):
        cond_full = p[n, i, j] / p_ij[i, j]
        cond_own = p_ni[n, i] / p_i[i]
        total += p[n, i, j] * np.log2(cond_full / cond_own)
    return float(total)
