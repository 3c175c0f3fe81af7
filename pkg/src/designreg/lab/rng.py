"""Counter-based random streams keyed by (seed, replication index)."""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def replication_stream(seed: int, rep: int) -> np.random.Generator:
    """Independent Philox stream for one replication.

    The Philox key is the pair (seed, rep), so replication ``rep`` sees the
    same numbers no matter which worker runs it or in what order.
    """
    if rep < 0:
        raise ValueError("replication index must be nonnegative")
    key = np.array([seed & _MASK64, rep & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
