"""Binary consensus from fuzzy counting and the weak coin.

Each phase every still-running process fuzzily counts the ones (O) and zeros
(Z) among the running set, setting N = O + Z, then applies exact integer
threshold rules on (O, N): decide 1 / lean 1 / decide 0 / lean 0 / flip.  A
flip takes the process's bit from a fresh weak-coin invocation, which runs
every phase so that non-flippers relay registers even when their own bit is
already pinned.  A process that finds itself decided re-checks survivor
counts three phases apart and fully halts when the running set has stopped
shrinking fast; halting is final (crash-stop model, no terminal relaying).

Two safety nets make termination unconditional: a process seeing fewer than
sqrt(n / log n) survivors triggers a deterministic all-to-all fallback, and
every phase reserves a fixed window for it so the global round schedule never
depends on hidden state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .coin import CoinParams, run_coin
from .counting import CountingParams, fast_counting
from .engine import SimContext, SimulationError, Transcript, run_simulation
from .exchange import clog2


class PhaseAction(Enum):
    DECIDE1 = "decide1"
    LEAN1 = "lean1"
    DECIDE0 = "decide0"
    LEAN0 = "lean0"
    FLIP = "flip"


def phase_decision(ones: int, total: int) -> PhaseAction:
    """Threshold rule on the fuzzy counts, in exact integer arithmetic.

    Equivalent to comparing ones against (7N-1)/10, (6N-1)/10, (4N-1)/10 and
    (5N-1)/10 without rationals.
    """
    if not 0 <= ones <= total:
        raise ValueError("need 0 <= ones <= total")
    o10 = 10 * ones
    if o10 > 7 * total - 1:
        return PhaseAction.DECIDE1
    if o10 > 6 * total - 1:
        return PhaseAction.LEAN1
    if o10 < 4 * total - 1:
        return PhaseAction.DECIDE0
    if o10 < 5 * total - 1:
        return PhaseAction.LEAN0
    return PhaseAction.FLIP


def should_stop(n_minus3: int, n_minus2: int, n_now: int) -> bool:
    """Decided processes halt when the running set shrank by at most a tenth
    of its recent size over the last three phases."""
    return 10 * (n_minus3 - n_now) <= n_minus2


def fallback_threshold(n: int) -> int:
    """Survivor count below which a process abandons the phase loop."""
    if n < 2:
        return 1
    return math.ceil(math.sqrt(n / math.log2(n)))


def fallback_rounds(n: int) -> int:
    """Flood rounds reserved per phase: enough for min-value convergence."""
    return fallback_threshold(n) + 1


@dataclass(frozen=True)
class ConsensusParams:
    """Protocol shape: counting branch x, base degree d, growth factor alpha."""

    x: int
    d: int
    alpha: int
    preset: str = "custom"

    @classmethod
    def constant(cls, n: int, epsilon: float = 0.5) -> "ConsensusParams":
        """x = alpha = n^epsilon (rounded, floored at 2), d = log n."""
        scale = max(2, round(n ** epsilon))
        return cls(x=scale, d=max(2, clog2(n)), alpha=scale, preset="constant")

    @classmethod
    def polylog(cls, n: int) -> "ConsensusParams":
        """x = 2, d = alpha = log n."""
        base = max(2, clog2(n))
        return cls(x=2, d=base, alpha=base, preset="polylog")

    def coin_params(self, n: int) -> CoinParams:
        return CoinParams.make(n, d=self.d, alpha=self.alpha)

    def counting_params(self) -> CountingParams:
        return CountingParams(x=self.x, d=self.d, alpha=self.alpha)


@dataclass
class PhaseStats:
    phase: int
    max_ones: int
    max_total: int
    flips: int
    decided: int
    stopped: int
    fallback: int


@dataclass
class ConsensusResult:
    decisions: np.ndarray  # -1 for processes that crashed undecided
    phases: int
    transcript: Transcript
    phase_stats: list[PhaseStats] = field(default_factory=list)

    @property
    def agreed(self) -> bool:
        vals = set(self.decisions[self.decisions >= 0].tolist())
        return len(vals) <= 1

    def valid(self, inputs: np.ndarray) -> bool:
        vals = set(self.decisions[self.decisions >= 0].tolist())
        return vals <= set(inputs.tolist())


class PhaseCapExceeded(SimulationError):
    pass


def _fallback_window(ctx: SimContext, b: np.ndarray, trigger: np.ndarray,
                     decisions: np.ndarray) -> None:
    """Fixed per-phase window: announcement round plus min-value flooding.

    Triggering processes multicast their bit; anyone hearing an announcement
    joins.  Joiners then flood their current minimum to everybody for a fixed
    number of rounds, decide the minimum they hold, and halt.  The window
    always consumes the same number of rounds, sends nothing when idle, and
    floods to all so late joiners catch up within one round.
    """
    n = ctx.n
    val = b.astype(np.int64).copy()
    everyone = ~np.eye(n, dtype=bool)
    announce = everyone & trigger[:, None]
    delivered = ctx.exchange(announce, 1, payload={"bit": val})
    joined = trigger | delivered.any(axis=0)
    for _ in range(fallback_rounds(n)):
        sending = everyone & joined[:, None]
        delivered = ctx.exchange(sending, 1, payload={"bit": val})
        if delivered.any():
            incoming = np.where(delivered, val[:, None], 2).min(axis=0)
            heard = delivered.any(axis=0)
            np.minimum(val, np.where(heard, incoming, 2), out=val)
            joined |= heard
    deciders = joined & ctx.active
    decisions[deciders] = val[deciders]
    ctx.halt(deciders)


def _consensus_protocol(ctx: SimContext, inputs: np.ndarray,
                        params: ConsensusParams, phase_cap: int,
                        stats_out: list[PhaseStats]) -> np.ndarray:
    n = ctx.n
    b = inputs.astype(np.int64).copy()
    decisions = np.full(n, -1, dtype=np.int64)
    decided = np.zeros(n, dtype=bool)
    if n == 1:
        decisions[0] = b[0]
        return decisions
    counting = params.counting_params()
    coin = params.coin_params(n)
    threshold = fallback_threshold(n)
    totals_history: list[np.ndarray] = []
    for phase in range(1, phase_cap + 1):
        if not ctx.active.any():
            return decisions
        state = {"phase": phase, "b": b, "decided": decided}
        ones, zeros = fast_counting(ctx, b, counting, tag=("count", phase),
                                    state=state)
        totals = ones + zeros
        totals_history.append(totals.copy())

        trigger = ctx.active & (totals < threshold)
        _fallback_window(ctx, b, trigger, decisions)

        stopped = np.zeros(n, dtype=bool)
        if phase >= 4:
            n3 = totals_history[-4]
            n2 = totals_history[-3]
            check = decided & ctx.active
            stopped = check & (10 * (n3 - totals) <= n2)
            decisions[stopped] = b[stopped]
            ctx.halt(stopped)
            decided &= ~check  # survivors of the check start over undecided

        act_ones = ones
        act_tot = totals
        running = ctx.active
        o10 = 10 * act_ones
        decide1 = running & (o10 > 7 * act_tot - 1)
        lean1 = running & ~decide1 & (o10 > 6 * act_tot - 1)
        decide0 = running & ~decide1 & ~lean1 & (o10 < 4 * act_tot - 1)
        lean0 = (running & ~decide1 & ~lean1 & ~decide0
                 & (o10 < 5 * act_tot - 1))
        flip = running & ~(decide1 | lean1 | decide0 | lean0)
        decided = decided | decide1 | decide0
        decided &= running
        b[decide1 | lean1] = 1
        b[decide0 | lean0] = 0

        coin_bits = run_coin(ctx, coin, tag=("coin", phase), state=state)
        b[flip] = coin_bits[flip]

        stats_out.append(PhaseStats(
            phase=phase,
            max_ones=int(act_ones[running].max(initial=0)),
            max_total=int(act_tot[running].max(initial=0)),
            flips=int(flip.sum()),
            decided=int(decided.sum()),
            stopped=int(stopped.sum()),
            fallback=int(trigger.sum()),
        ))
        if not ctx.active.any():
            return decisions
    raise PhaseCapExceeded(f"no termination within {phase_cap} phases")


def run_consensus(inputs: np.ndarray, params: ConsensusParams, t: int,
                  adversary, seed: int, phase_cap: int = 120,
                  round_cap: int = 5_000_000,
                  record_rounds: bool = False) -> ConsensusResult:
    """Full protocol run; raises PhaseCapExceeded if it cannot terminate."""
    inputs = np.asarray(inputs, dtype=np.int64)
    n = inputs.size
    stats: list[PhaseStats] = []
    holder: dict = {}

    def protocol(ctx: SimContext) -> dict:
        decisions = _consensus_protocol(ctx, inputs, params, phase_cap, stats)
        holder["decisions"] = decisions
        return {"decisions": [int(v) for v in decisions.tolist()],
                "phases": len(stats)}

    transcript = run_simulation(protocol, n, t, adversary, seed,
                                round_cap=round_cap,
                                record_rounds=record_rounds)
    return ConsensusResult(decisions=holder["decisions"], phases=len(stats),
                           transcript=transcript, phase_stats=stats)
