"""Shuffle surrogates: the finite-sample baseline for transfer entropy.

Random streams are numpy ``PCG64`` generators seeded by
``SeedSequence(seed, spawn_key=(*stream, replicate))``.  ``stream`` is a tuple
of nonnegative integers identifying the task (the pipeline uses a hash of the
stock id, the bit pattern of ``d`` and the direction), so every replicate has
its own stream and serial and parallel runs agree bit for bit.
"""

from __future__ import annotations

import enum
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from infoflow.entropy import EmbeddingSpec, transfer_entropy
from infoflow.errors import LengthError, ParameterError
from infoflow.returns import SymbolSeries

__all__ = [
    "Direction",
    "SurrogateStats",
    "SurrogateConfig",
    "replicate_rng",
    "stream_key",
    "shuffle_series",
    "surrogate_te",
]


class Direction(enum.Enum):
    J_to_I = "J_to_I"
    I_to_J = "I_to_J"


@dataclass(frozen=True)
class SurrogateStats:
    mean: float
    std_dev: float
    n_surrogates: int
    seed: int

    @property
    def std_error(self):
        return self.std_dev / np.sqrt(self.n_surrogates)


@dataclass(frozen=True)
class SurrogateConfig:
    n_surrogates: int = 20
    seed: int = 0
    # also shuffle the target; for sensitivity checks only
    shuffle_both: bool = False

    def __post_init__(self):
        if self.n_surrogates < 1:
            raise ParameterError("n_surrogates must be at least 1")


def stream_key(*parts):
    """Map ids, floats and ints to the integer words ``SeedSequence`` wants."""
    key = []
    for part in parts:
        if isinstance(part, str):
            key.append(zlib.crc32(part.encode("utf-8")))
        elif isinstance(part, float):
            key.append(int.from_bytes(struct.pack(">d", part), "big"))
        elif isinstance(part, enum.Enum):
            key.append(zlib.crc32(str(part.value).encode("utf-8")))
        else:
            key.append(int(part))
    return tuple(key)


def replicate_rng(seed, stream=(), replicate=0):
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(*stream, replicate))
    return np.random.Generator(np.random.PCG64(ss))


def shuffle_series(s: SymbolSeries, rng_state) -> SymbolSeries:
    """Uniform random permutation of ``s``'s states.

    ``rng_state`` is a ``numpy.random.Generator`` or an integer seed.
    """
    if len(s) == 0:
        raise LengthError(f"{s.instrument_id}: cannot shuffle an empty series")
    rng = rng_state if isinstance(rng_state, np.random.Generator) else replicate_rng(rng_state)
    return s.with_states(rng.permutation(s.states))


def surrogate_te(
    I: SymbolSeries,
    J: SymbolSeries,
    spec: EmbeddingSpec,
    direction: Direction,
    n_surrogates: int,
    seed: int,
    stream=(),
    shuffle_both: bool = False,
) -> SurrogateStats:
    """Mean and spread of transfer entropy with the source series shuffled.

    ``direction`` picks the flow: ``J_to_I`` shuffles ``J`` and measures
    ``J -> I``; ``I_to_J`` shuffles ``I`` and measures ``I -> J``.
    """
    if n_surrogates < 1:
        raise ParameterError("n_surrogates must be at least 1")
    direction = Direction(direction)
    target, source = (I, J) if direction is Direction.J_to_I else (J, I)
    values = np.empty(n_surrogates)
    for r in range(n_surrogates):
        rng = replicate_rng(seed, stream, r)
        src = shuffle_series(source, rng)
        tgt = shuffle_series(target, rng) if shuffle_both else target
        values[r] = transfer_entropy(tgt, src, spec).value
    std = float(values.std(ddof=1)) if n_surrogates > 1 else 0.0
    return SurrogateStats(float(values.mean()), std, n_surrogates, int(seed))
