"""Counter-based uniform streams.

Trial `i` of a run keyed by `seed` always reads the same Philox blocks, so
sharded and sequential runs see identical inputs.
"""

from __future__ import annotations

import numpy as np

GENERATOR_ID = "philox4x64-10"
_WORDS_PER_BLOCK = 4


def blocks_per_trial(dim: int) -> int:
    return max(1, -(-dim // _WORDS_PER_BLOCK))


def uniform_matrix(seed: int, start: int, n: int, dim: int) -> np.ndarray:
    """Uniforms in the open interval (0, 1) for trials start..start+n-1, shape (n, dim)."""
    if n <= 0:
        return np.empty((0, dim))
    bpt = blocks_per_trial(dim)
    bitgen = np.random.Philox(key=int(seed), counter=start * bpt)
    raw = bitgen.random_raw(n * bpt * _WORDS_PER_BLOCK).reshape(n, bpt * _WORDS_PER_BLOCK)
    # top 53 bits, offset by half an ulp so 0 and 1 never occur
    return ((raw[:, :dim] >> np.uint64(11)).astype(np.float64) + 0.5) * (2.0 ** -53)


def uniform_rows(seed: int, n: int, dim: int, start: int = 0) -> list[list[float]]:
    """Same stream as `uniform_matrix`, as plain Python floats."""
    return uniform_matrix(seed, start, n, dim).tolist()


def shard_ranges(n: int, shards: int) -> list[tuple[int, int]]:
    shards = max(1, min(shards, n)) if n else 1
    step = -(-n // shards) if n else 0
    return [(a, min(n, a + step)) for a in range(0, n, step)] if n else []
