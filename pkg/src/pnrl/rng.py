"""Deterministic random-stream derivation.

A single master seed expands into independent named streams (one for the
environment, one per agent, one per partner pool, ...) via a hash of the
master seed and a label path, keyed into a counter-based Philox generator.
Identical (master_seed, labels) always yields the identical stream, on any
platform, regardless of how many other streams a run creates.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _digest(master_seed: int, labels: tuple) -> bytes:
    parts = ["pnrl", str(int(master_seed))]
    parts.extend(str(x) for x in labels)
    return hashlib.sha256("|".join(parts).encode("utf-8")).digest()


def stream(master_seed: int, *labels) -> np.random.Generator:
    """Return the named substream of the master seed."""
    key = int.from_bytes(_digest(master_seed, labels)[:16], "little")
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(master_seed: int, *labels) -> int:
    """Collapse a named substream to a plain integer seed in [0, 2**63)."""
    return int.from_bytes(_digest(master_seed, labels)[16:24], "little") >> 1
