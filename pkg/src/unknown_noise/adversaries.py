"""Bundled adversary strategies.

All strategies are oblivious: they plan from the public parameters, the
message, the slot calendar and their own random generator. Each one names the
failure event or cost term it pushes on.

=====================  =======================================================
name                   behaviour
=====================  =======================================================
``null``               never flips
``budgeted_random``    ``B`` flips at uniform positions over a horizon of twice
                       the noise-free run length
``plaintext_corruptor`` one flip in each of ``k`` distinct plaintext symbols
``fingerprint_jammer`` garbles a quarter of every fingerprint until the budget
                       runs out
``silence_spoofer``    toggles silent request slots often enough to look noisy
``echo_jammer``        garbles a quarter of every echo until the budget runs out
=====================  =======================================================
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .channel import Adversary, SlotMeta, SlotPlan
from .protocol import derive_params, round_params, zero_noise_cost


def _base_phase(phase: str) -> str:
    return phase.rsplit(":", 1)[-1]


def _stage(phase: str) -> str:
    return phase.rsplit(":", 1)[0] if ":" in phase else ""


class _Strategy(Adversary):
    """Helpers shared by the bundled strategies."""

    def reset(self, public, message, rng):
        super().reset(public, message, rng)
        if "L" in public:
            self._stages = {"": derive_params(public["L"], Fraction(public["delta"]))}
        else:
            self._stages = {s: derive_params(p["L"], Fraction(p["delta"])) for s, p in public.items()}
        self.spent = 0

    def params_for(self, meta: SlotMeta):
        return self._stages.get(_stage(meta.phase)) or next(iter(self._stages.values()))

    def _mask(self, n: int, positions) -> np.ndarray:
        m = np.zeros(n, dtype=np.uint8)
        m[np.asarray(positions, dtype=np.int64)] = 1
        return m


class NullAdversary(_Strategy):
    """Never flips. Baseline for exact cost checks."""

    name = "null"


class BudgetedRandom(_Strategy):
    """``B`` flips at distinct uniform step indices.

    The positions are drawn once, uniformly over a horizon of twice the
    noise-free run length, so most land on round 0 and on the first
    fingerprint/echo exchange. Exercises every failure event a little.
    """

    name = "budgeted_random"
    target = "all (unstructured noise)"

    def __init__(self, B: int = 50):
        if B < 0:
            raise ValueError("budget must be non-negative")
        self.B = int(B)

    def reset(self, public, message, rng):
        super().reset(public, message, rng)
        horizon = 2 * sum(zero_noise_cost(p) for p in self._stages.values())
        self._positions = np.sort(rng.choice(horizon, size=min(self.B, horizon), replace=False))

    def plan(self, view, meta):
        lo = np.searchsorted(self._positions, meta.step)
        hi = np.searchsorted(self._positions, meta.step + meta.length)
        return SlotPlan(self._mask(meta.length, self._positions[lo:hi] - meta.step))


class PlaintextCorruptor(_Strategy):
    """Flips one bit in each of ``k`` distinct round-0 symbols.

    Makes ``k`` of Bob's initial tuples bad, so his first guess is wrong and
    the resend loop has to outvote them. Exercises the bad-tuple bound.
    """

    name = "plaintext_corruptor"
    target = "bad tuples (resend loop, round count)"

    def __init__(self, k: int = 8):
        if k < 0:
            raise ValueError("k must be non-negative")
        self.k = int(k)

    def plan(self, view, meta):
        if _base_phase(meta.phase) != "plaintext":
            return SlotPlan.passive(meta.length)
        p = self.params_for(meta)
        symbols = self.rng.choice(p.d + 1, size=min(self.k, p.d + 1), replace=False)
        bits = self.rng.integers(0, p.k, size=symbols.size)
        return SlotPlan(self._mask(meta.length, symbols * p.k + bits))


class _SlotJammer(_Strategy):
    """Garbles a fixed share of the encoded part of one slot type each round."""

    phase = ""
    share = Fraction(1, 4)

    def __init__(self, budget: int = 1000):
        if budget < 0:
            raise ValueError("budget must be non-negative")
        self.budget = int(budget)

    def plan(self, view, meta):
        if _base_phase(meta.phase) != self.phase:
            return SlotPlan.passive(meta.length)
        p = self.params_for(meta)
        span = min(round_params(meta.round, p).sizes.fp_enc_len, meta.length)
        need = int(-(-span * self.share.numerator // self.share.denominator))
        if self.spent + need > self.budget:
            return SlotPlan.passive(meta.length)
        self.spent += need
        return SlotPlan(self._mask(meta.length, self.rng.choice(span, size=need, replace=False)))


class FingerprintJammer(_SlotJammer):
    """Corrupts Bob's fingerprint slot every round while the budget lasts.

    Alice cannot validate a garbled fingerprint, so she answers with zeros and
    the round turns into a resend. Pushes on the fingerprint-error event
    (more rounds, more chances of a collision) and on cost.
    """

    name = "fingerprint_jammer"
    target = "fingerprint error, cost"
    phase = "fingerprint"


class EchoJammer(_SlotJammer):
    """Corrupts Alice's echo slot every round while the budget lasts.

    Bob never sees his fingerprint come back intact and keeps asking for more
    evaluations. Pushes on the AMD-error event and on cost.
    """

    name = "echo_jammer"
    target = "AMD error, cost"
    phase = "echo"


class SilenceSpoofer(_Strategy):
    """Pays to make silent request slots look noisy.

    After Bob terminates, the request slot is silent and Alice should stop.
    The spoofer toggles the held bit at evenly spaced steps, about a third of
    the slot, so Alice keeps going. On a slot where Bob does transmit the
    toggles only re-randomise already random bits. Attacks Alice's
    termination and the cost after Bob has left.
    """

    name = "silence_spoofer"
    target = "termination (unintentional silence), cost"

    def __init__(self, budget: int = 1000):
        if budget < 0:
            raise ValueError("budget must be non-negative")
        self.budget = int(budget)

    def plan(self, view, meta):
        if _base_phase(meta.phase) != "request":
            return SlotPlan.passive(meta.length)
        n = meta.length
        need = -(-n // 3) + 1
        if self.spent + need > self.budget or need >= n:
            return SlotPlan.passive(n)
        self.spent += need
        positions = 1 + (np.arange(need) * (n - 1)) // need
        return SlotPlan(self._mask(n, positions), free_bit=0)


class OmniscientEchoForger(_Strategy):
    """Stress-test strategy that sees transmitted bits.

    Flips one plaintext bit so that Bob's first guess is wrong, then flips
    exactly the bits needed to turn Alice's zero answer into a copy of Bob's
    fingerprint slot seen earlier in the round. Bob accepts the forged echo
    and outputs the wrong message. Outside the model of the guarantees;
    provided to show why the information barrier matters.
    """

    name = "omniscient_echo_forger"
    mode = "omniscient"
    target = "none of the guarantees apply"

    def __init__(self, budget: int = 10_000):
        self.budget = int(budget)
        self._last_fp = None

    def plan(self, view, meta):
        base = _base_phase(meta.phase)
        if base == "plaintext" and self.spent < self.budget:
            self.spent += 1
            return SlotPlan(self._mask(meta.length, [0]))
        if view.sent is None:
            return SlotPlan.passive(meta.length)
        if base == "fingerprint":
            self._last_fp = view.sent.copy()
        if base == "echo" and self._last_fp is not None and self._last_fp.size == meta.length:
            flips = view.sent ^ self._last_fp
            cost = int(flips.sum())
            if self.spent + cost <= self.budget:
                self.spent += cost
                return SlotPlan(flips)
        return SlotPlan.passive(meta.length)


REGISTRY = {
    cls.name: cls
    for cls in (NullAdversary, BudgetedRandom, PlaintextCorruptor, FingerprintJammer,
                SilenceSpoofer, EchoJammer, OmniscientEchoForger)
}
ALIASES = {
    "null": "null", "none": "null", "budgetedrandom": "budgeted_random", "random": "budgeted_random",
    "plaintextcorruptor": "plaintext_corruptor", "fingerprintjammer": "fingerprint_jammer",
    "silencespoofer": "silence_spoofer", "echojammer": "echo_jammer",
    "omniscientechoforger": "omniscient_echo_forger",
}
# strategies of the bundled library that the guarantees cover
BUNDLED = ("null", "budgeted_random", "plaintext_corruptor", "fingerprint_jammer",
           "silence_spoofer", "echo_jammer")


class ConfigError(ValueError):
    """Unknown adversary name or malformed parameters."""


def canonical_name(name: str) -> str:
    key = name.strip().lower()
    if key in REGISTRY:
        return key
    key = key.replace("_", "").replace("-", "")
    if key not in ALIASES:
        raise ConfigError(f"unknown adversary {name!r}; known: {', '.join(REGISTRY)}")
    return ALIASES[key]


def make_adversary(spec: str) -> Adversary:
    """Build a strategy from ``"name"`` or ``"name:params"``.

    ``params`` is either one positional integer (``budgeted_random:50``) or
    comma-separated ``key=value`` pairs (``plaintext_corruptor:k=4``).
    """
    name, _, arg = spec.partition(":")
    cls = REGISTRY[canonical_name(name)]
    kwargs = {}
    if arg.strip():
        try:
            if "=" in arg:
                for part in arg.split(","):
                    k, _, v = part.partition("=")
                    kwargs[k.strip()] = int(v)
                return cls(**kwargs)
            return cls(int(arg))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad parameters for {name!r}: {arg!r} ({exc})") from exc
    return cls()


__all__ = [
    "BUNDLED", "REGISTRY", "ConfigError", "make_adversary", "canonical_name", "NullAdversary",
    "BudgetedRandom", "PlaintextCorruptor", "FingerprintJammer", "EchoJammer", "SilenceSpoofer",
    "OmniscientEchoForger",
]
