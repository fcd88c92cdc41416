"""Synchronous binary channel with an adversary that pays per flipped bit.

One bit crosses the channel per step. When a party transmits, the adversary
may flip the bit at a cost of one. When nobody transmits the channel is
silent: the first bit of a silent run is the adversary's free choice, and
each later bit repeats the previous delivered bit unless the adversary pays
one flip to toggle it. A silent run ends as soon as anyone transmits.

The adversary decides a whole slot at a time. It returns a :class:`SlotPlan`
(flip mask plus the free bit for a silent run) after seeing an
:class:`AdversaryView`. In the default ``oblivious`` mode the view carries only
public data: protocol parameters, the message, the slot calendar and the
adversary's own history. ``omniscient`` mode also exposes the transmitted bits
and the sender; it is meant for stress tests, and the protocol guarantees do
not cover it.
"""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .bits import as_bits

ALICE, BOB, NOBODY = "alice", "bob", "none"
MODES = ("oblivious", "omniscient")
TRANSCRIPT_COLUMNS = ("index", "sender", "sent", "delivered", "flipped", "charge", "phase")


class ProtocolDesyncError(RuntimeError):
    """Both parties tried to transmit in the same step."""


class FlipLedger:
    """Running count of charged adversary flips, split by phase label."""

    def __init__(self):
        self._per_phase = defaultdict(int)
        self._total = 0

    def charge(self, phase: str, count: int = 1):
        if count < 0:
            raise ValueError("charges are non-negative")
        self._per_phase[phase] += int(count)
        self._total += int(count)

    @property
    def total(self) -> int:
        return self._total

    @property
    def per_phase(self) -> dict:
        return dict(self._per_phase)


@dataclass(frozen=True)
class SlotMeta:
    """Public description of a slot: calendar position and length."""

    phase: str
    round: int
    length: int
    step: int


@dataclass(frozen=True)
class SlotPlan:
    """Adversary decision for one slot.

    Attributes
    ----------
    flips : numpy.ndarray
        0/1 mask of length ``meta.length``. On transmitted steps a 1 flips the
        bit; on silent steps it toggles the held value.
    free_bit : int
        Value delivered on the first step of a silent run.
    """

    flips: np.ndarray
    free_bit: int = 0

    @staticmethod
    def passive(n: int) -> SlotPlan:
        return SlotPlan(np.zeros(n, dtype=np.uint8))


@dataclass(frozen=True)
class AdversaryView:
    """Everything an adversary may condition on when planning a slot."""

    public: MappingProxyType
    message: np.ndarray
    history: tuple
    step: int
    phase: str
    round: int
    # omniscient mode only
    sent: np.ndarray | None = None
    sender: str | None = None


class Adversary:
    """Base strategy: never flips.

    Subclasses override :meth:`plan`. ``rng`` is the adversary's own
    generator, independent of the parties' generators.
    """

    name = "null"
    mode = "oblivious"
    target = "none"

    def reset(self, public: dict, message, rng: np.random.Generator):
        self.public = public
        self.message = message
        self.rng = rng

    def plan(self, view: AdversaryView, meta: SlotMeta) -> SlotPlan:
        return SlotPlan.passive(meta.length)


@dataclass
class _Record:
    index: np.ndarray
    sender: str
    sent: np.ndarray | None
    delivered: np.ndarray
    flipped: np.ndarray
    charge: np.ndarray
    phase: str


@dataclass
class Channel:
    """Shared channel for one run.

    Parameters
    ----------
    adversary : Adversary
    public : dict
        Public parameters shown to the adversary.
    message : bit array
        Alice's message (the adversary knows it).
    record : bool
        Keep a per-step transcript.
    """

    adversary: Adversary = field(default_factory=Adversary)
    public: dict = field(default_factory=dict)
    message: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))
    record: bool = False

    def __post_init__(self):
        if self.adversary.mode not in MODES:
            raise ValueError(f"unknown adversary mode {self.adversary.mode!r}")
        self.ledger = FlipLedger()
        self.step = 0
        self.sent_by = {ALICE: 0, BOB: 0}
        self.sent_by_phase = defaultdict(int)
        self._held = None  # delivered bit while inside a silent run, else None
        self._pending = None
        self._history = []
        self._records: list[_Record] = []
        self._public = MappingProxyType(dict(self.public))
        self._message = as_bits(self.message).copy()
        self._message.setflags(write=False)

    # slot-level interface

    def send(self, sender: str, bits):
        """Queue ``bits`` from ``sender`` for the next slot."""
        if self._pending is not None:
            raise ProtocolDesyncError(f"{sender} transmits while {self._pending[0]} is transmitting")
        if sender not in (ALICE, BOB):
            raise ValueError(f"unknown sender {sender!r}")
        self._pending = (sender, as_bits(bits))

    def listen(self, n: int, phase: str = "", round: int = 0) -> np.ndarray:
        """Deliver the next ``n`` steps: the queued transmission, or silence."""
        if n < 1:
            raise ValueError("listen needs n >= 1")
        if self._pending is not None:
            sender, bits = self._pending
            if bits.size != n:
                raise ProtocolDesyncError(f"{sender} sends {bits.size} bits into a {n}-step slot")
            self._pending = None
            return self._run(sender, bits, phase, round)
        return self._run(NOBODY, None, phase, round, n=n)

    def flush(self, phase: str = "", round: int = 0) -> np.ndarray | None:
        """Push a queued transmission that nobody listens to."""
        if self._pending is None:
            return None
        sender, bits = self._pending
        self._pending = None
        return self._run(sender, bits, phase, round)

    def _view(self, meta: SlotMeta, sender, sent) -> AdversaryView:
        omni = self.adversary.mode == "omniscient"
        return AdversaryView(self._public, self._message, tuple(self._history), meta.step,
                             meta.phase, meta.round,
                             sent.copy() if omni and sent is not None else None,
                             sender if omni else None)

    def _run(self, sender, bits, phase, round, n=None) -> np.ndarray:
        n = bits.size if bits is not None else n
        meta = SlotMeta(phase, round, n, self.step)
        plan = self.adversary.plan(self._view(meta, sender, bits), meta)
        flips = as_bits(plan.flips)
        if flips.size != n:
            raise ValueError(f"adversary returned {flips.size} flips for a {n}-step slot")
        self._history.append((meta, plan))
        delivered, charge = self._apply(sender, bits, flips, int(plan.free_bit))
        self.ledger.charge(phase, int(charge.sum()))
        if sender != NOBODY:
            self.sent_by[sender] += n
            self.sent_by_phase[phase] += n
        if self.record:
            self._records.append(_Record(np.arange(self.step, self.step + n), sender,
                                         None if bits is None else bits.copy(),
                                         delivered.copy(), flips.copy(), charge, phase))
        self.step += n
        return delivered

    def _apply(self, sender, bits, flips, free_bit):
        if sender != NOBODY:
            self._held = None
            return bits ^ flips, flips.copy()
        charge = flips.copy()
        if self._held is None:
            # first step of a silent run: the adversary's free choice
            start = (free_bit ^ int(flips[0])) & 1
            charge[0] = 0
            toggles = flips.copy()
            toggles[0] = 0
        else:
            start = self._held
            toggles = flips
        delivered = (start ^ (np.cumsum(toggles) & 1)).astype(np.uint8)
        self._held = int(delivered[-1])
        return delivered, charge

    # step-level interface

    def step_transmit(self, sender: str | None, bit: int | None, phase: str = "", round: int = 0) -> int:
        """Run a single step; equivalent to a one-step slot."""
        if sender in (None, NOBODY):
            return int(self.listen(1, phase, round)[0])
        self.send(sender, [bit])
        return int(self.listen(1, phase, round)[0])

    # transcript

    @property
    def transcript(self) -> list[tuple]:
        rows = []
        for r in self._records:
            for i in range(r.index.size):
                rows.append((int(r.index[i]), r.sender,
                             "" if r.sent is None else int(r.sent[i]),
                             int(r.delivered[i]), int(r.flipped[i]), int(r.charge[i]), r.phase))
        return rows

    def transcript_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRANSCRIPT_COLUMNS)
        w.writerows(self.transcript)
        return buf.getvalue()


def alternations(s) -> int:
    s = as_bits(s)
    return int(np.count_nonzero(s[1:] != s[:-1]))


def is_silent(s) -> bool:
    """True iff ``s`` has fewer than ``len(s) / 3`` alternations."""
    s = as_bits(s)
    if s.size < 1:
        raise ValueError("is_silent needs a non-empty string")
    return 3 * alternations(s) < s.size
