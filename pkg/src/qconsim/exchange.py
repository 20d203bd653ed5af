"""Adaptive inquiry/response relay.

This is the communication pattern shared by the weak coin, gossip, and the
per-group exchanges inside fuzzy counting.  Time is organized into epochs,
each consisting of testing iterations of two strict rounds:

  round A -- every participant sends a 1-bit inquiry to its current
             neighborhood layer N_p(d * alpha^degree_level);
  round B -- every process that received inquiries responds to each inquirer
             with its payload (hidden register copy or rumor set) plus its
             current adaptive degree.

Within an epoch the adaptive degree starts at the epoch's degree level and
may only fall: after each response round a process keeps the largest level
x <= its current one for which at least delta responders reported adaptive
degree >= x, flooring at level 0.  At the end of an epoch, a process whose
adaptive degree fell below its degree level grows the degree level by one
(capped at its top layer); the adaptive degree rejoins the degree level when
the next epoch starts.

Several disjoint groups can run the pattern in lock-step: each process uses
the layer caps of its own group while the epoch/iteration counts come from
the window parameters (derived from the largest group).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import SimContext
from .graphs import layer_count
from .rng import substream


def clog2(x: int) -> int:
    """ceil(log2(x)); 0 for x <= 1."""
    return (x - 1).bit_length() if x > 1 else 0


def gamma_of(m: int, alpha: int) -> int:
    """Smallest g with alpha**g >= m (equals ceil(log m / log alpha))."""
    g = 0
    cap = 1
    while cap < m:
        cap *= alpha
        g += 1
    return g


def adapt_degree(responder_levels: list[int], current: int, delta: int) -> int:
    """New adaptive-degree level after one response round (reference version).

    ``responder_levels`` are the adaptive-degree levels reported by the
    processes that responded this iteration; levels encode degrees d*alpha^x,
    with level -1 standing for the underflow value d/alpha.  Loop-exact: while
    fewer than ``delta`` responders report a level >= the current one and the
    current level is still >= 0 (degree >= d), the level drops by one.  The
    terminal level -1 is what makes the degree grow at the end of the epoch.
    """
    x = current
    while x >= 0 and sum(1 for r in responder_levels if r >= x) < delta:
        x -= 1
    return x


def end_epoch_update(degree_level: int, adaptive_level: int, k: int) -> int:
    """Degree level for the next epoch: grow one layer iff adaptation fell."""
    if adaptive_level < degree_level:
        return min(degree_level + 1, k)
    return degree_level


def _adapt_vec(ad: np.ndarray, delivered: np.ndarray, delta: int,
               k_max: int) -> np.ndarray:
    """Vectorized adapt_degree over all recipients at once.

    delivered[p, q] means responder p's payload reached q; responder p
    reported level ad[p].
    """
    counts = np.zeros((k_max + 1, ad.size), dtype=np.int64)
    for lv in range(k_max + 1):
        counts[lv] = delivered[ad >= lv].sum(axis=0)
    new = np.full_like(ad, -1)
    unset = np.ones(ad.size, dtype=bool)
    for lv in range(k_max, -1, -1):
        take = unset & (ad >= lv) & (counts[lv] >= delta)
        new[take] = lv
        unset &= ~take
    return new


class KeyCarrier:
    """Payload for the coin: one hidden max-mergeable key per process."""

    def __init__(self, keys: np.ndarray, bits: int, qubits: int):
        self.keys = keys.astype(np.int64)
        self.bits = bits
        self.qubits = qubits

    def payloads(self, ad: np.ndarray):
        return {"adaptive_degree": ad}, {"register_key": self.keys}

    def merge(self, delivered: np.ndarray) -> None:
        if not delivered.any():
            return
        incoming = np.where(delivered, self.keys[:, None], -1).max(axis=0)
        np.maximum(self.keys, incoming, out=self.keys)


class RumorCarrier:
    """Payload for gossip/counting: per-key max-mergeable rumor matrices.

    Each matrix is (n, n_keys) with -1 marking an absent rumor; all matrices
    ride in the same message (one classical payload).
    """

    def __init__(self, matrices: list[np.ndarray], bits: int):
        self.matrices = matrices
        self.bits = bits
        self.qubits = 0

    def payloads(self, ad: np.ndarray):
        classical = {"adaptive_degree": ad}
        for i, m in enumerate(self.matrices):
            classical[f"rumors{i}"] = m
        return classical, None

    def merge(self, delivered: np.ndarray) -> None:
        if not delivered.any():
            return
        mask = delivered[:, :, None]
        for m in self.matrices:
            incoming = np.where(mask, m[:, None, :], -1).max(axis=0)
            np.maximum(m, incoming, out=m)


@dataclass
class Window:
    """Lock-step schedule parameters for one adaptive-relay window."""

    epochs: int
    iterations: int
    delta: int

    @classmethod
    def for_size(cls, m: int, d: int, alpha: int) -> "Window":
        k = layer_count(m, d, alpha)
        gamma = gamma_of(m, alpha)
        return cls(epochs=(k + 2) ** 2, iterations=gamma + 1,
                   delta=-(-2 * alpha // 3))

    @property
    def rounds(self) -> int:
        return self.epochs * self.iterations * 2


def run_relay(ctx: SimContext, layers: np.ndarray, k_caps: np.ndarray,
              window: Window, carrier, state: dict | None = None) -> None:
    """Run one full adaptive-relay window, mutating ``carrier`` in place.

    ``layers`` is (k_max+1, n, n) bool with layers[i][p] the targets of p at
    level i; rows above a process's own cap must repeat its top layer.
    ``k_caps`` is the per-process top level.
    """
    n = ctx.n
    rows = np.arange(n)
    lvl = np.zeros(n, dtype=np.int64)
    k_max = int(k_caps.max(initial=0))
    for _ in range(window.epochs):
        ad = lvl.copy()
        for _ in range(window.iterations):
            inq = layers[np.minimum(lvl, k_caps), rows, :]
            got_inq = ctx.exchange(inq, 1, state=state)
            resp = got_inq.T
            classical, hidden = carrier.payloads(ad)
            got_resp = ctx.exchange(resp, carrier.bits, carrier.qubits,
                                    payload=classical, hidden=hidden,
                                    state=state)
            ad_sent = ad
            carrier.merge(got_resp)
            ad = _adapt_vec(ad_sent, got_resp, window.delta, k_max)
        lvl = np.where(ad < lvl, np.minimum(lvl + 1, k_caps), lvl)


def _diameter_within(adj: np.ndarray, limit: int) -> bool:
    """True iff the graph is connected with diameter <= limit."""
    m = adj.shape[0]
    reach = adj | np.eye(m, dtype=bool)
    steps = 1
    while steps < limit and not reach.all():
        reach = reach @ reach  # doubles the radius
        steps *= 2
    return bool(reach.all())


def shared_group_layers(n: int, groups: list[np.ndarray], d: int, alpha: int,
                        seed: int, tag, max_steps: int | None = None
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic (public-seed) undirected layered graphs per group.

    Every process in a group of size m gets symmetric neighbor layers with
    edge probability min(1, d*alpha^i / m) inside its group.  Layers are
    nested (layer i contains layer i-1) with exact per-layer marginals, so a
    process that grows its degree keeps pulling from its old neighbors.  The
    base layer of each group is certified connected with diameter at most
    ``max_steps`` (the relay iterations available), resampling deterministically
    until the certificate holds -- this stands in for a fixed graph family
    known to have the needed properties.  Returns (layers, k_caps) in the
    format run_relay expects.
    """
    k_caps = np.zeros(n, dtype=np.int64)
    k_max = 0
    for g in groups:
        k_g = layer_count(len(g), d, alpha)
        k_caps[g] = k_g
        k_max = max(k_max, k_g)
    layers = np.zeros((k_max + 1, n, n), dtype=bool)
    for g in groups:
        m = len(g)
        if m <= 1:
            continue
        k_g = layer_count(m, d, alpha)
        iu = np.triu_indices(m, k=1)
        for attempt in range(1000):
            rng = substream(seed, "shared-layers", tag, d, alpha,
                            int(g[0]), attempt)
            edges = np.zeros(iu[0].size, dtype=bool)
            blocks = []
            prev_prob = 0.0
            for i in range(k_g + 1):
                prob = min(1.0, d * alpha ** i / m)
                top_up = ((prob - prev_prob) / (1.0 - prev_prob)
                          if prev_prob < 1.0 else 0.0)
                edges |= rng.random(iu[0].size) < top_up
                prev_prob = prob
                block = np.zeros((m, m), dtype=bool)
                block[iu] = edges
                blocks.append(block | block.T)
            if max_steps is None or _diameter_within(blocks[0], max_steps):
                break
        else:
            raise RuntimeError("could not certify a connected base layer")
        for i in range(k_max + 1):
            layers[np.ix_([i], g, g)] = blocks[min(i, k_g)]
    return layers, k_caps


def private_layers(n: int, d: int, alpha: int, seed: int, tag
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Per-process private directed layers over all n processes (coin style)."""
    k = layer_count(n, d, alpha)
    layers = np.zeros((k + 1, n, n), dtype=bool)
    for p in range(n):
        rng = substream(seed, "private-layers", tag, p)
        for i in range(k + 1):
            prob = min(1.0, d * alpha ** i / n)
            row = rng.random(n) < prob
            row[p] = False
            layers[i, p] = row
    return layers, np.full(n, k, dtype=np.int64)
