"""Type extensions"""

from io import IOBase
from pathlib import Path
from typing import Union

import numpy as np

PathType = Union[str, Path]
PathOrIO = Union[PathType, IOBase]
SeedOrRng = Union[int, np.random.Generator, None]

# Subscripted generics cannot be used with isinstance checks, so these are tuples
PathTypeCls = (str, Path)


def ensure_rng(seed_or_rng: SeedOrRng) -> np.random.Generator:
    """Generators are passed through, ints and None seed a new PCG64 generator."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def spawn_rngs(seed_or_rng: SeedOrRng, n: int) -> list[np.random.Generator]:
    """Independent child generators, e.g. one per layer or per AIS chain block."""
    if isinstance(seed_or_rng, np.random.Generator):
        seeds = seed_or_rng.integers(0, 2**63 - 1, size=n, dtype=np.int64)
        return [np.random.default_rng(int(s)) for s in seeds]
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed_or_rng).spawn(n)]


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic child seed of (seed, keys...), e.g. for grid members."""
    return int(np.random.SeedSequence([int(seed), *[int(k) for k in keys]]).generate_state(1)[0])
