"""Counter-based random streams keyed by ``(root seed, task index)``.

Every task draws from its own Philox generator, derived without reference
to any other task, so results do not depend on scheduling or thread count.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for task ``key`` under root ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed) & ((1 << 64) - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def streams(seed: int, count: int, *prefix: int) -> list[np.random.Generator]:
    return [stream(seed, *prefix, i) for i in range(count)]
