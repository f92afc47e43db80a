import numpy as np

__all__ = ["Tag", "derive_seed", "derive_rng"]


class Tag:
    INIT = 1
    CHASE = 2
    ESCAPE = 3
    SPLIT = 4
    D_MIN = 5
    PROBE = 6
    EVAL = 7
    CMA = 8


def derive_seed(master: int, tag: int, *keys: int) -> int:
    """63-bit seed that depends only on (master, tag, keys)."""
    keys = tuple(int(k) for k in keys)
    if any(k < 0 for k in keys):
        raise ValueError(f"seed keys must be non-negative, got {keys}")
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=(int(tag),) + keys)
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def derive_rng(master: int, tag: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, tag, *keys))
