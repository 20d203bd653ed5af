"""Synchronous round engine with an adaptive full-information crash adversary.

Execution proceeds in lock-step rounds.  Each round the protocol hands the
engine an intent batch: a boolean (n, n) matrix of sender->recipient targets
plus per-sender cost in classical bits and qubits, an optional classical
payload (dict of per-sender arrays), and an optional hidden payload.  The
adversary is consulted with a view of everything classical -- targets, costs,
classical payloads, protocol state, the full crash/halt picture -- but never
the hidden payload.  It may crash senders mid-multicast, choosing which
subset of their messages is still delivered, subject to a strict total budget
of fewer than t crashes.

Cost accounting: an alive sender pays for every message it attempts; a sender
crashed in the very round of its multicast pays only for the delivered
subset.  Recipients that are crashed or halted receive nothing.

The engine keeps a running SHA-256 digest over canonical per-round bytes so
that two runs of the same configuration can be compared exactly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterator, Optional

import numpy as np


class SimulationError(Exception):
    """Base class for engine failures."""


class RoundCapExceeded(SimulationError):
    """The protocol ran past the configured round cap."""


class AdversaryViolation(SimulationError):
    """The adversary returned an illegal crash decision."""


@dataclass(frozen=True)
class MessageIntent:
    """One attempted message.  Ids are 0-based engine indices."""

    sender: int
    recipient: int
    classical_bits: int
    qubit_count: int
    payload: Any = None


@dataclass
class CrashDecision:
    """Adversary output for one round.

    ``newly_crashed`` lists 0-based sender indices to crash this round.
    ``partial_delivery`` maps a newly crashed sender to a boolean recipient
    mask selecting which of its intended messages are still delivered
    (missing entry means nothing is delivered).
    """

    newly_crashed: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    partial_delivery: dict[int, np.ndarray] = field(default_factory=dict)


EMPTY_DECISION = CrashDecision()


class AdversaryView:
    """Read-only classical snapshot handed to the adversary each round.

    Holds references to live engine arrays for speed; adversaries must not
    mutate them.  Hidden payloads are not reachable from a view.
    """

    __slots__ = (
        "round",
        "n",
        "t",
        "alive",
        "halted",
        "targets",
        "bits_per_message",
        "qubits_per_message",
        "payload",
        "state",
        "crashes_used",
    )

    def __init__(self, round_, n, t, alive, halted, targets, bits, qubits,
                 payload, state, crashes_used):
        self.round = round_
        self.n = n
        self.t = t
        self.alive = alive
        self.halted = halted
        self.targets = targets
        self.bits_per_message = bits
        self.qubits_per_message = qubits
        self.payload = payload
        self.state = state
        self.crashes_used = crashes_used

    @property
    def crash_budget_left(self) -> int:
        return max(0, self.t - 1 - self.crashes_used)

    def intents(self) -> Iterator[MessageIntent]:
        """Materialize the intent batch as individual messages."""
        senders, recipients = np.nonzero(self.targets)
        for s, r in zip(senders.tolist(), recipients.tolist()):
            pl = None
            if self.payload:
                pl = {k: v[s] for k, v in self.payload.items()}
            yield MessageIntent(s, r, int(self.bits_per_message[s]),
                                int(self.qubits_per_message[s]), pl)


@dataclass
class CostLedger:
    """Per-process communication totals."""

    rounds_active: np.ndarray
    bits: np.ndarray
    qubits: np.ndarray

    @classmethod
    def empty(cls, n: int) -> "CostLedger":
        return cls(np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64),
                   np.zeros(n, dtype=np.int64))

    @property
    def total_bits(self) -> int:
        return int(self.bits.sum())

    @property
    def total_qubits(self) -> int:
        return int(self.qubits.sum())

    def amortized_bits(self) -> Fraction:
        """Exact bits per process: total over all senders divided by n."""
        return Fraction(self.total_bits, self.bits.size)

    def amortized_qubits(self) -> Fraction:
        return Fraction(self.total_qubits, self.qubits.size)

    def summary(self) -> dict:
        return {
            "total_bits": self.total_bits,
            "total_qubits": self.total_qubits,
            "process_rounds": int(self.rounds_active.sum()),
            "amortized_bits": str(self.amortized_bits()),
            "amortized_qubits": str(self.amortized_qubits()),
        }


@dataclass
class Transcript:
    """Replayable summary of one simulation."""

    n: int
    t: int
    seed: int
    adversary: str
    rounds: int
    crashed: list[int]
    outputs: dict
    ledger: dict
    digest: str
    round_records: Optional[list] = None

    def to_json(self) -> str:
        body = {
            "n": self.n,
            "t": self.t,
            "seed": self.seed,
            "adversary": self.adversary,
            "rounds": self.rounds,
            "crashed": [p + 1 for p in self.crashed],
            "outputs": self.outputs,
            "ledger": self.ledger,
            "digest": self.digest,
        }
        if self.round_records is not None:
            body["round_records"] = self.round_records
        return json.dumps(body, sort_keys=True, indent=2) + "\n"


class SimContext:
    """Mutable engine state threaded through a protocol run.

    Process ids are 0-based indices everywhere inside the engine; exported
    artifacts (transcript JSON) translate to 1-based ids.
    """

    def __init__(self, n: int, t: int, adversary, seed: int,
                 round_cap: int = 2_000_000, record_rounds: bool = False):
        if n < 1:
            raise ValueError("n must be >= 1")
        if not (0 <= t <= n):
            raise ValueError("t must be in [0, n]")
        self.n = n
        self.t = t
        self.seed = seed
        self.round = 0
        self.round_cap = round_cap
        self.alive = np.ones(n, dtype=bool)
        self.halted = np.zeros(n, dtype=bool)
        self.crashes_used = 0
        self.ledger = CostLedger.empty(n)
        self.adversary = adversary
        adversary.reset(n, t, seed)
        self._hash = hashlib.sha256(f"{n}|{t}|{seed}".encode())
        self.record_rounds = record_rounds
        self.round_records: list = [] if record_rounds else None
        self._no_targets = np.zeros((n, n), dtype=bool)

    # -- state queries -------------------------------------------------

    @property
    def active(self) -> np.ndarray:
        """Alive and not halted."""
        return self.alive & ~self.halted

    def halt(self, mask: np.ndarray) -> None:
        """Remove processes from the computation (they keep their output)."""
        self.halted |= mask

    # -- the one communication primitive --------------------------------

    def exchange(self, targets: np.ndarray, bits, qubits=0,
                 payload: Optional[dict] = None, hidden: Optional[dict] = None,
                 state: Optional[dict] = None) -> np.ndarray:
        """Run one synchronous round; return the delivered (n, n) bool matrix.

        ``bits``/``qubits`` are per-message costs, scalar or per-sender
        arrays.  ``payload`` (classical) is shown to the adversary; ``hidden``
        never is.  ``state`` is extra classical protocol state for the view.
        """
        if self.round >= self.round_cap:
            raise RoundCapExceeded(f"round cap {self.round_cap} reached")
        n = self.n
        bits_arr = np.broadcast_to(np.asarray(bits, dtype=np.int64), (n,))
        qubits_arr = np.broadcast_to(np.asarray(qubits, dtype=np.int64), (n,))

        sendable = self.active
        targets = targets & sendable[:, None]
        np.fill_diagonal(targets, False)

        view = AdversaryView(self.round, n, self.t, self.alive, self.halted,
                             targets, bits_arr, qubits_arr, payload, state,
                             self.crashes_used)
        decision = self.adversary.decide(view)
        newly = np.asarray(decision.newly_crashed, dtype=np.int64)
        if newly.size:
            if not self.alive[newly].all():
                raise AdversaryViolation("adversary crashed a dead process")
            if self.crashes_used + newly.size >= self.t:
                raise AdversaryViolation("crash budget exceeded")
            self.crashes_used += int(newly.size)
            self.alive[newly] = False

        delivered = targets.copy()
        for s in newly.tolist():
            keep = decision.partial_delivery.get(s)
            if keep is None:
                delivered[s] = False
            else:
                delivered[s] &= keep
        # recipients crashed or halted (including crashed this round) get nothing
        delivered &= self.active[None, :]

        # cost: survivors pay for attempts, crash-round senders for deliveries
        sent = targets.sum(axis=1)
        if newly.size:
            sent[newly] = delivered[newly].sum(axis=1)
        self.ledger.bits += bits_arr * sent
        self.ledger.qubits += qubits_arr * sent
        self.ledger.rounds_active += self.active

        h = self._hash
        h.update(self.round.to_bytes(4, "little"))
        h.update(delivered.tobytes())
        h.update(newly.tobytes())
        h.update(bits_arr.tobytes())
        h.update(qubits_arr.tobytes())
        h.update(self.alive.tobytes())
        h.update(self.halted.tobytes())

        if self.record_rounds:
            self.round_records.append({
                "round": self.round,
                "crashed": [int(p) + 1 for p in newly.tolist()],
                "messages": int(delivered.sum()),
            })

        self.round += 1
        return delivered

    def idle_round(self, state: Optional[dict] = None) -> None:
        """A round in which nobody sends (keeps the schedule in lock-step)."""
        self.exchange(self._no_targets, 0, state=state)

    # -- wrap-up ---------------------------------------------------------

    def finish(self, outputs: dict, adversary_name: str) -> Transcript:
        canon = json.dumps(outputs, sort_keys=True, default=str).encode()
        self._hash.update(canon)
        self._hash.update(json.dumps(self.ledger.summary(), sort_keys=True).encode())
        return Transcript(
            n=self.n, t=self.t, seed=self.seed, adversary=adversary_name,
            rounds=self.round,
            crashed=np.nonzero(~self.alive)[0].tolist(),
            outputs=outputs, ledger=self.ledger.summary(),
            digest=self._hash.hexdigest(),
            round_records=self.round_records,
        )


def deliver_round(intents: list[MessageIntent], decision: CrashDecision,
                  alive: np.ndarray) -> dict[int, list[MessageIntent]]:
    """Reference per-message delivery semantics.

    Given an intent list, a crash decision, and the alive mask *before* the
    round, return recipient -> delivered messages.  The vectorized engine is
    tested against this function.
    """
    newly = set(int(p) for p in np.asarray(decision.newly_crashed).tolist())
    alive_after = alive.copy()
    for p in newly:
        alive_after[p] = False
    inbox: dict[int, list[MessageIntent]] = {}
    for m in intents:
        if not alive[m.sender]:
            continue
        if m.sender in newly:
            keep = decision.partial_delivery.get(m.sender)
            if keep is None or not keep[m.recipient]:
                continue
        if not alive_after[m.recipient]:
            continue
        inbox.setdefault(m.recipient, []).append(m)
    return inbox


def run_simulation(protocol: Callable[[SimContext], dict], n: int, t: int,
                   adversary, seed: int, round_cap: int = 2_000_000,
                   record_rounds: bool = False) -> Transcript:
    """Execute ``protocol`` under ``adversary`` and return its transcript."""
    ctx = SimContext(n, t, adversary, seed, round_cap=round_cap,
                     record_rounds=record_rounds)
    outputs = protocol(ctx)
    return ctx.finish(outputs, getattr(adversary, "name", "unknown"))
