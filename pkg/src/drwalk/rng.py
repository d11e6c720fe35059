"""Per-member random streams derived from a master seed.

Member ``i`` always gets ``SeedSequence(master, spawn_key=(stream, i))`` so a
member's draws do not depend on how many members run or in which order.
"""

from __future__ import annotations

import numpy as np


def member_rng(master_seed: int, member: int, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(stream), int(member)))
    return np.random.Generator(np.random.PCG64(ss))


def member_rngs(master_seed: int, n: int, stream: int = 0) -> list[np.random.Generator]:
    return [member_rng(master_seed, i, stream) for i in range(n)]
