"""Deterministic sub-seed derivation.

Every random draw in the package goes through a Generator obtained from
``rng_for(seed, purpose, ...)`` so that results are a pure function of the
run seed and a purpose label, never of call order.
"""

import hashlib

import numpy as np

_SEP = "\x1f"


def stable_seed(*parts) -> int:
    """Hash (seed, purpose-label, ...) parts into a 63-bit integer seed."""
    text = _SEP.join(repr(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & ((1 << 63) - 1)


def rng_for(*parts) -> np.random.Generator:
    return np.random.default_rng(stable_seed(*parts))
