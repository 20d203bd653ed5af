"""Deterministic, counter-addressable randomness.

Every random draw in a simulation comes from a Philox generator keyed by
SHA-256 of the master seed plus a tuple of string-able coordinates.  Streams
for distinct coordinate tuples are statistically independent, and the same
coordinates always reproduce the same stream, so any sub-computation can be
replayed in isolation.  Process-private streams (hidden coin registers,
private neighborhood draws) and the adversary's stream use disjoint
coordinate prefixes and therefore never collide.
"""

from __future__ import annotations

import hashlib

import numpy as np


def substream(seed: int, *coords) -> np.random.Generator:
    """Return the generator addressed by (seed, *coords).

    Coordinates may be ints, strings, or anything with a stable str().
    """
    text = "|".join([str(seed), *(str(c) for c in coords)])
    digest = hashlib.sha256(text.encode()).digest()
    key = int.from_bytes(digest[:16], "little")
    return np.random.Generator(np.random.Philox(key=key))


def split_rng(seed: int, process: int, scope, tag: str) -> np.random.Generator:
    """Process-private substream for a given scope (round, phase, ...) and purpose."""
    return substream(seed, "proc", process, scope, tag)


def adversary_rng(seed: int, name: str) -> np.random.Generator:
    """The adversary's own substream, disjoint from all process streams."""
    return substream(seed, "adversary", name)
