import hashlib

import numpy as np


def derive_seed(seed: int, *labels) -> int:
    """Stable 63-bit child seed for a named pipeline stage."""
    key = "/".join([str(int(seed))] + [str(label) for label in labels])
    return int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "big") >> 1


def rng_for(seed: int, *labels) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *labels))
