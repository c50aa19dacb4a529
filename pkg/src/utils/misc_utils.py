# src/utils/misc_utils.py
import hashlib
from typing import Any

import numpy as np
import orjson


def derive_seed(master_seed: int, *path: int) -> int:
    """Counter-based child seed: same (master, path) gives the same 64-bit seed on any thread."""
    state = np.random.SeedSequence([master_seed, *path]).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])


def replicate_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, index]))


def config_digest(payload: Any) -> str:
    """Short stable hash of a JSON-serialisable configuration echo."""
    blob = orjson.dumps(payload, option=orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY)
    return hashlib.sha1(blob).hexdigest()[:16]
