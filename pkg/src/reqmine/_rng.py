import hashlib

import numpy as np


def _key_int(key):
    if isinstance(key, int) and key >= 0:
        return key
    digest = hashlib.sha256(str(key).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_rng(seed, *keys):
    """Independent counter-based generator for ``(seed, *keys)``.

    Streams for different key paths never overlap, so a per-fold or per-tree
    generator can be created anywhere without threading state through callers.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key_int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))
