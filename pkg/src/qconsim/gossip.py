"""Deterministic gossip over shared layered graphs.

Runs the same epoch/testing-iteration schedule as the coin, but responses
carry rumor sets instead of hidden registers.  A rumor set maps a small key
space (group indices) to integer values; on contact, sets merge key-wise and
conflicting values resolve to the maximum, so merging is order-independent
and idempotent.  The neighbor layers come from a public seed every process
shares, standing in for a deterministic graph family.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import SimContext
from .exchange import (RumorCarrier, Window, clog2, run_relay,
                       shared_group_layers)


@dataclass
class RumorSet:
    """key -> value mapping with max-merge semantics."""

    items: dict[int, int] = field(default_factory=dict)

    def merge(self, other: "RumorSet") -> "RumorSet":
        out = dict(self.items)
        for k, v in other.items.items():
            if out.get(k, v - 1) < v:
                out[k] = v
        return RumorSet(out)


def merge_rumors(a: RumorSet, b: RumorSet) -> RumorSet:
    """Key-wise union keeping the maximum value per key."""
    return a.merge(b)


def rumor_response_bits(n_keys: int, value_bits: int, k: int,
                        instances: int = 1) -> int:
    """Bits per response: the encoded rumor sets plus the adaptive degree."""
    return n_keys * value_bits * instances + clog2(k + 1)


def run_gossip(ctx: SimContext, initial: list[RumorSet], n_keys: int,
               d: int, alpha: int, graph_seed: int, tag="gossip",
               value_bits: int | None = None) -> list[RumorSet]:
    """Gossip among all active processes; returns final per-process rumor sets.

    All rumor values must be non-negative ints below 2**value_bits.
    """
    n = ctx.n
    mat = np.full((n, n_keys), -1, dtype=np.int64)
    for p, rs in enumerate(initial):
        for k, v in rs.items.items():
            mat[p, k] = v
    group = np.nonzero(ctx.active)[0]
    window = Window.for_size(len(group), d, alpha)
    layers, k_caps = shared_group_layers(
        n, [group], d, alpha, graph_seed, tag,
        max_steps=window.epochs * window.iterations)
    if value_bits is None:
        value_bits = clog2(int(mat.max(initial=0)) + 2)
    bits = rumor_response_bits(n_keys, value_bits, int(k_caps.max(initial=0)))
    carrier = RumorCarrier([mat], bits)
    run_relay(ctx, layers, k_caps, window, carrier)
    return [RumorSet({k: int(v) for k, v in enumerate(mat[p]) if v >= 0})
            for p in range(n)]
