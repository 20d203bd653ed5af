"""Weak global coin via hidden leader registers.

Each process privately draws a register holding a uniform leader value of
3*ceil(log2 n) bits and a uniform coin bit.  Registers propagate through the
adaptive inquiry/response relay; on contact a process keeps the register with
the lexicographically larger (leader_value, origin) pair, so the tie-break is
exact and the surviving register is the max over every relay path.  The final
output of a process is the coin bit of the register it holds.

Register contents are hidden payloads: the adversary schedules crashes with
full classical information but never observes leader values or coin bits, so
it cannot target the eventual leader except by luck.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import SimContext
from .exchange import KeyCarrier, Window, clog2, gamma_of, private_layers, run_relay
from .graphs import layer_count
from .rng import split_rng


@dataclass(frozen=True)
class HiddenRegister:
    """One process's register: adversary-invisible classical state."""

    leader_value: int
    coin_bit: int
    origin: int  # process id of the original drawer; exact tie-break


def init_register(p: int, n: int, rng) -> HiddenRegister:
    """Draw a fresh register from the process's private stream."""
    leader_bits = 3 * clog2(n)
    leader = int(rng.integers(0, 2 ** leader_bits)) if leader_bits else 0
    coin = int(rng.integers(0, 2))
    return HiddenRegister(leader, coin, p)


def merge_registers(a: HiddenRegister, b: HiddenRegister) -> HiddenRegister:
    """Keep the lexicographically larger (leader_value, origin) register."""
    return a if (a.leader_value, a.origin) >= (b.leader_value, b.origin) else b


@dataclass(frozen=True)
class CoinParams:
    """Derived schedule constants for one coin invocation on n processes."""

    n: int
    d: int
    alpha: int
    k: int
    gamma: int
    delta: int
    epochs: int
    iterations: int

    @classmethod
    def make(cls, n: int, d: int | None = None, alpha: int | None = None,
             delta: int | None = None, validate_scale: bool = False
             ) -> "CoinParams":
        base = max(2, clog2(n))
        d = base if d is None else d
        alpha = base if alpha is None else alpha
        if d < 1 or alpha < 2:
            raise ValueError("need d >= 1 and alpha >= 2")
        if validate_scale and (d < clog2(n) or alpha < clog2(n)):
            raise ValueError("d and alpha must be at least ceil(log2 n)")
        k = layer_count(n, d, alpha)
        gamma = gamma_of(n, alpha)
        if delta is None:
            delta = -(-2 * alpha // 3)
        return cls(n=n, d=d, alpha=alpha, k=k, gamma=gamma, delta=delta,
                   epochs=(k + 2) ** 2, iterations=gamma + 1)

    @property
    def rounds(self) -> int:
        """Exact number of engine rounds one invocation consumes."""
        return self.epochs * self.iterations * 2

    @property
    def register_qubits(self) -> int:
        return 3 * clog2(self.n) + 1

    @property
    def response_bits(self) -> int:
        return clog2(self.n) + clog2(self.k + 1)

    def window(self) -> Window:
        return Window(self.epochs, self.iterations, self.delta)


def run_coin(ctx: SimContext, params: CoinParams, tag="coin",
             state: dict | None = None) -> np.ndarray:
    """One coin invocation; returns the per-process output bit array.

    Output bits of crashed/halted processes are whatever register they last
    held; callers ignore them.
    """
    n = ctx.n
    leaders = np.zeros(n, dtype=np.int64)
    coin_bits = np.zeros(n, dtype=np.int64)
    for p in range(n):
        reg = init_register(p, n, split_rng(ctx.seed, p, tag, "register"))
        leaders[p] = reg.leader_value
        coin_bits[p] = reg.coin_bit
    # (leader_value, origin) as a single max-comparable key
    keys = leaders * n + np.arange(n)
    layers, k_caps = private_layers(n, params.d, params.alpha, ctx.seed, tag)
    carrier = KeyCarrier(keys, params.response_bits, params.register_qubits)
    run_relay(ctx, layers, k_caps, params.window(), carrier, state=state)
    origin = carrier.keys % n
    return coin_bits[origin]
