"""Seed handling.

Every source of randomness in a run is derived from one user seed through
named substreams, so reruns are bit-identical and independent stages
(item truth, ability truth, responses, each chain) never share a stream.
"""

from __future__ import annotations

import hashlib

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    """Return a generator for the named substream of ``seed``."""
    digest = hashlib.sha256(name.encode("utf-8")).digest()[:8]
    key = int.from_bytes(digest, "little")
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(key,)))
