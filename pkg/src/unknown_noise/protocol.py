"""Two-party transfer of an L-bit message over a channel with unknown noise.

Round 0: Alice sends the evaluations of her message polynomial at the first
``d + 1`` points in plaintext. Round ``j >= 1`` has four slots:

1. ``fingerprint``: Bob sends an encoded fingerprint of his current guess;
2. ``echo``: Alice echoes it if it matches her polynomial, else zeros;
3. ``request``: Bob terminates if the echo came back intact, otherwise he
   sends uniformly random bits to ask for more evaluations;
4. ``evaluation``: if Alice heard something that is not silence, she sends
   two fresh evaluations; if she heard silence she terminates.

Every slot of round ``j`` is ``b_j = C * lambda_j`` bits long, with
``lambda_j = ceil(log2(L / eta_j))`` and ``eta_j = 2**-(j // d) * delta / (6 d)``.
The constant ``C`` is the smallest integer (at least 19) for which every
encoded payload of every round fits in its slot.

Alice and Bob are generators yielding :class:`Send` / :class:`Listen`
actions. :func:`run_known_l` pairs them over a shared :class:`Channel`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import ceil

import numpy as np

from .bits import as_bits, bits_to_int, ceil_log2, chunk_ints, int_to_bits, ints_to_bits
from .blockcode import DEFAULT_PARAMS, CodeParams, ec_decode, ec_encode, encoded_length
from .channel import ALICE, BOB, Adversary, Channel, is_silent
from .field import gf
from .integrity import (
    Fingerprint, FingerprintSeed, WidthError, amd_encode, amd_length, amd_parse,
    fingerprint, fingerprint_width, is_codeword,
)
from .rscode import (
    Polynomial, TupleMultiset, evaluate_many, evaluation_point, get_polynomial, majority_filter,
    pack_message, unpack_message,
)

HEADER_BITS = 64
C_MIN = 19


def _delta(delta) -> Fraction:
    if isinstance(delta, float):
        delta = Fraction(str(delta))
    delta = Fraction(delta)
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return delta


@dataclass(frozen=True)
class LevelSizes:
    """Payload sizes shared by every round ``j`` with ``j // d == level``."""

    level: int
    eta: Fraction
    lam: int
    fp_width: int
    fp_amd_len: int
    fp_enc_len: int
    eval_amd_len: int
    eval_enc_len: int


def _level_sizes(ell: int, k: int, eta0: Fraction, lam0: int, level: int, code: CodeParams) -> LevelSizes:
    eta = eta0 / (1 << level)
    wf = fingerprint_width(ell, eta)
    fp_amd = amd_length(2 * wf, eta)
    ev_amd = amd_length(2 * k, eta)
    return LevelSizes(level, eta, lam0 + level, wf, fp_amd, encoded_length(fp_amd, code),
                      ev_amd, encoded_length(ev_amd, code))


@dataclass(frozen=True)
class ProtocolParams:
    """Parameters both parties derive from ``(L, delta)``.

    Attributes
    ----------
    L : int
        Message length.
    delta : Fraction
        Target failure probability.
    k : int
        Bits per field element; ``q = 2**k``.
    d : int
        Polynomial degree bound.
    C : int
        Slot-size constant.
    lambda0 : int
        ``ceil(log2(6 L d / delta))``, the value of ``lambda_j`` for ``j < d``.
    max_level : int
        Largest ``j // d`` whose hash and tag widths stay within 64 bits.
    """

    L: int
    delta: Fraction
    k: int
    d: int
    C: int
    lambda0: int
    max_level: int
    code: CodeParams = DEFAULT_PARAMS

    @property
    def q(self) -> int:
        return 1 << self.k

    @property
    def field(self):
        return gf(self.k)

    @property
    def L_eff(self) -> int:
        """Message length after padding the degenerate ``L = 1`` case."""
        return max(self.L, 2)

    @property
    def ell(self) -> int:
        """Length of the serialized polynomial that is fingerprinted."""
        return (self.d + 1) * self.k

    @property
    def eta0(self) -> Fraction:
        return self.delta / (6 * self.d)

    @property
    def rho(self) -> Fraction:
        return self.code.rho

    def sizes(self, level: int) -> LevelSizes:
        return _sizes_cached(self.ell, self.k, self.eta0, self.lambda0, level, self.code)

    def public(self) -> dict:
        return {"L": self.L, "delta": str(self.delta), "q": self.q, "k": self.k, "d": self.d,
                "C": self.C, "lambda0": self.lambda0, "rho": str(self.rho)}


_sizes_cached = lru_cache(maxsize=4096)(_level_sizes)


@lru_cache(maxsize=1024)
def _derive(L: int, delta: Fraction, code: CodeParams) -> ProtocolParams:
    L_eff = max(L, 2)
    k = ceil_log2(L_eff)
    d = max(-(-L_eff // k) - 1, 1)
    lam0 = ceil_log2(Fraction(6 * L_eff * d) / delta)
    eta0 = delta / (6 * d)
    ell = (d + 1) * k
    C, level = C_MIN, 0
    while True:
        try:
            s = _sizes_cached(ell, k, eta0, lam0, level, code)
        except WidthError:
            break
        C = max(C, -(-max(s.fp_enc_len, s.eval_enc_len) // s.lam))
        level += 1
    if level == 0:
        raise ValueError(f"delta={delta} is too small for 64-bit fingerprints at L={L}")
    return ProtocolParams(L, delta, k, d, C, lam0, level - 1, code)


def derive_params(L: int, delta, code: CodeParams = DEFAULT_PARAMS) -> ProtocolParams:
    """Field size, degree and slot constant for an ``L``-bit message.

    Examples
    --------
    >>> p = derive_params(1000, 0.01)
    >>> (p.q, p.d)
    (1024, 99)
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    return _derive(int(L), _delta(delta), code)


@dataclass(frozen=True)
class RoundParams:
    j: int
    eta: Fraction
    lam: int
    b: int
    eval_len: int
    sizes: LevelSizes


class LevelLimitError(RuntimeError):
    """The round schedule ran past the widest supported hash."""


def round_params(j: int, params: ProtocolParams) -> RoundParams:
    """Strength and slot length of round ``j >= 1``."""
    if j < 1:
        raise ValueError("rounds are numbered from 1")
    level = j // params.d
    if level > params.max_level:
        raise LevelLimitError(f"round {j} needs level {level} > {params.max_level}")
    s = params.sizes(level)
    b = params.C * s.lam
    return RoundParams(j, s.eta, s.lam, b, max(b, s.eval_enc_len), s)


# actions exchanged between the party generators and the driver

@dataclass(frozen=True)
class Send:
    bits: np.ndarray
    phase: str
    round: int


@dataclass(frozen=True)
class Listen:
    n: int
    phase: str
    round: int


def _pad(bits, n: int) -> np.ndarray:
    out = np.zeros(n, dtype=np.uint8)
    out[: bits.size] = bits
    return out


class Alice:
    """Sender state machine."""

    def __init__(self, M, params: ProtocolParams, rng: np.random.Generator):
        M = as_bits(M)
        if M.size != params.L:
            raise ValueError(f"message has {M.size} bits, parameters are for {params.L}")
        self.params = params
        self.rng = rng
        self.P = pack_message(_pad(M, params.L_eff), params.d, params.field)
        self._serial = self.P.to_bits()
        self.round = 0
        self.next_index = params.d + 1
        self.terminated = False
        self.tuples_sent = 0

    def _y(self, idx):
        F = self.params.field
        return evaluate_many(self.P, [evaluation_point(i, F) for i in idx])

    def run(self):
        p = self.params
        ys = self._y(range(p.d + 1))
        self.tuples_sent = p.d + 1
        yield Send(ints_to_bits(ys, p.k), "plaintext", 0)
        while True:
            self.round += 1
            rp = round_params(self.round, p)
            s = rp.sizes
            heard = yield Listen(rp.b, "fingerprint", rp.j)
            echo = np.zeros(rp.b, dtype=np.uint8)
            cw = ec_decode(heard[: s.fp_enc_len], p.code, length=s.fp_amd_len)
            if self._check_fingerprint(cw, rp):
                echo = _pad(ec_encode(cw, p.code), rp.b)
            yield Send(echo, "echo", rp.j)
            request = yield Listen(rp.b, "request", rp.j)
            if is_silent(request):
                self.terminated = True
                return
            ys = self._y([self.next_index, self.next_index + 1])
            payload = amd_encode(ints_to_bits(ys, p.k), rp.eta, self.rng).to_bits()
            self.next_index += 2
            self.tuples_sent += 2
            yield Send(_pad(ec_encode(payload, p.code), rp.eval_len), "evaluation", rp.j)

    def _check_fingerprint(self, cw, rp: RoundParams) -> bool:
        parsed = amd_parse(cw, rp.eta)
        if parsed is None or not is_codeword(parsed, rp.eta):
            return False
        if parsed.payload.size != 2 * rp.sizes.fp_width:
            return False
        fp = Fingerprint.from_bits(parsed.payload)
        mine = fingerprint(fp.seed, self._serial, rp.eta, self.params.ell)
        return mine.digest == fp.digest


class Bob:
    """Receiver state machine.

    Parameters
    ----------
    params : ProtocolParams
    rng : numpy.random.Generator
    observer : callable, optional
        Called as ``observer(j, P_b, B)`` each time Bob recomputes his guess
        at the start of round ``j``.
    """

    def __init__(self, params: ProtocolParams, rng: np.random.Generator, observer=None):
        self.params = params
        self.rng = rng
        self.observer = observer
        self.B = TupleMultiset()
        self.P_b: Polynomial | None = None
        self.round = 0
        self.next_index = params.d + 1
        self.terminated = False
        self.decoded: np.ndarray | None = None

    def run(self):
        p = self.params
        F = p.field
        heard = yield Listen((p.d + 1) * p.k, "plaintext", 0)
        for i, y in enumerate(chunk_ints(heard, p.k)):
            self.B.add(evaluation_point(i, F), y)
        while True:
            self.round += 1
            rp = round_params(self.round, p)
            s = rp.sizes
            self.P_b = get_polynomial(majority_filter(self.B), p.d, F, hint=self.P_b)
            if self.observer is not None:
                self.observer(rp.j, self.P_b, self.B)
            seed = FingerprintSeed.sample(self.rng, p.ell, rp.eta)
            fp = fingerprint(seed, self.P_b.to_bits(), rp.eta, p.ell)
            f_b = amd_encode(fp.to_bits(), rp.eta, self.rng).to_bits()
            yield Send(_pad(ec_encode(f_b, p.code), rp.b), "fingerprint", rp.j)
            echo = yield Listen(rp.b, "echo", rp.j)
            if np.array_equal(ec_decode(echo[: s.fp_enc_len], p.code, length=f_b.size), f_b):
                self.decoded = unpack_message(self.P_b, p.L_eff)[: p.L]
                self.terminated = True
                return
            yield Send(self.rng.integers(0, 2, rp.b, dtype=np.uint8), "request", rp.j)
            heard = yield Listen(rp.eval_len, "evaluation", rp.j)
            cw = ec_decode(heard[: s.eval_enc_len], p.code, length=s.eval_amd_len)
            ys = chunk_ints(cw[: 2 * p.k], p.k)
            self.B.add(evaluation_point(self.next_index, F), ys[0])
            self.B.add(evaluation_point(self.next_index + 1, F), ys[1])
            self.next_index += 2


@dataclass(frozen=True)
class RunReport:
    """Outcome of one simulated run."""

    success: bool
    failure: str
    L: int
    delta: Fraction
    T: int
    total_sent_alice: int
    total_sent_bob: int
    rounds: int
    tuples_sent: int
    tuple_round_cost: int
    per_phase_sent: dict
    per_phase_flips: dict
    seed: int
    child_seeds: tuple
    bad_tuple_checks: int = 0
    bad_tuple_violations: tuple = ()
    learned_L: int | None = None
    decoded: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def total_sent(self) -> int:
        return self.total_sent_alice + self.total_sent_bob

    @property
    def incomplete(self) -> bool:
        return self.failure == "incomplete"

    def to_row(self) -> dict:
        """Flat record with stable keys."""
        row = {
            "success": int(self.success), "failure": self.failure, "L": self.L,
            "delta": str(self.delta), "T": self.T, "totalSent": self.total_sent,
            "totalSentAlice": self.total_sent_alice, "totalSentBob": self.total_sent_bob,
            "rounds": self.rounds, "tuplesSent": self.tuples_sent,
            "tupleRoundCost": self.tuple_round_cost, "seed": self.seed,
            "childSeeds": " ".join(str(s) for s in self.child_seeds),
            "badTupleChecks": self.bad_tuple_checks,
            "badTupleViolations": len(self.bad_tuple_violations),
            "learnedL": "" if self.learned_L is None else self.learned_L,
        }
        for k, v in sorted(self.per_phase_sent.items()):
            row[f"sent[{k}]"] = v
        for k, v in sorted(self.per_phase_flips.items()):
            row[f"flips[{k}]"] = v
        return row


def _child_rngs(seed: int, n: int):
    ss = np.random.SeedSequence(seed)
    kids = ss.spawn(n)
    return [np.random.default_rng(c) for c in kids], tuple(int(c.generate_state(1)[0]) for c in kids)


@dataclass
class _PhaseResult:
    success: bool
    failure: str
    rounds: int
    tuples_sent: int
    tuple_round_cost: int
    decoded: np.ndarray | None
    bad_tuple_checks: int
    bad_tuple_violations: list


def _simulate(M, params_a: ProtocolParams, params_b: ProtocolParams, rng_a, rng_b,
              channel: Channel, stage: str, max_rounds: int) -> _PhaseResult:
    M = as_bits(M)
    alice = Alice(M, params_a, rng_a)
    checks, violations = [0], []

    def observer(j, P_b, B):
        # bad tuples through round j-1 must be at least (j-1)/4 whenever the guess is wrong
        if params_a.L < 3 or params_a != params_b:
            return
        checks[0] += 1
        if P_b.coeffs != alice.P.coeffs:
            ys = evaluate_many(alice.P, [x for (x, _), _ in B.items()])
            bad = sum(m for ((x, y), m), good in zip(B.items(), ys) if y != good)
            if 4 * bad < j - 1:
                violations.append((j - 1, bad))

    bob = Bob(params_b, rng_b, observer)
    label = (lambda ph: f"{stage}:{ph}") if stage else (lambda ph: ph)
    gens = {ALICE: alice.run(), BOB: bob.run()}
    acts = {name: next(g) for name, g in gens.items()}
    round_cost, tuple_cost, eval_rounds = {}, 0, set()
    failure = ""

    def cost(act):
        round_cost[act.round] = round_cost.get(act.round, 0) + act.bits.size
        if act.phase == "evaluation":
            eval_rounds.add(act.round)

    while acts:
        rnd = max(a.round for a in acts.values())
        if rnd > max_rounds:
            failure = "incomplete"
            break
        if ALICE not in acts:
            failure = "alice_left_first"
            break
        replies = {}
        if len(acts) == 2:
            a, b = acts[ALICE], acts[BOB]
            if isinstance(a, Send) == isinstance(b, Send):
                raise RuntimeError(f"lockstep broken: {a} vs {b}")
            snd, lst = (ALICE, BOB) if isinstance(a, Send) else (BOB, ALICE)
            act = acts[snd]
            if acts[lst].n != act.bits.size:
                raise RuntimeError(f"slot length mismatch in {act.phase}")
            channel.send(snd, act.bits)
            replies[lst] = channel.listen(act.bits.size, label(act.phase), act.round)
            replies[snd] = None
            cost(act)
        else:
            (who, act), = acts.items()
            if isinstance(act, Send):
                channel.send(who, act.bits)
                channel.flush(label(act.phase), act.round)
                replies[who] = None
                cost(act)
            else:
                replies[who] = channel.listen(act.n, label(act.phase), act.round)
        nxt = {}
        for who, val in replies.items():
            try:
                nxt[who] = gens[who].send(val)
            except StopIteration:
                pass
            except LevelLimitError:
                failure = "incomplete"
        if failure:
            break
        acts = nxt

    tuple_cost = round_cost.get(0, 0) + sum(round_cost[r] for r in eval_rounds)
    if not failure:
        if not bob.terminated:
            failure = "incomplete"
        elif params_b.L != M.size or not np.array_equal(bob.decoded, M):
            failure = "wrong_message"
    return _PhaseResult(not failure, failure, max(alice.round, bob.round), alice.tuples_sent,
                        tuple_cost, bob.decoded, checks[0], violations)


def default_max_rounds(params: ProtocolParams) -> int:
    return 64 * params.d


def _report(success, failure, L, delta, channel, rounds, tuples, tuple_cost, seed, kids,
            checks, violations, learned=None, decoded=None) -> RunReport:
    per_phase_sent = dict(sorted(channel.sent_by_phase.items()))
    return RunReport(success, failure, L, delta, channel.ledger.total, channel.sent_by[ALICE],
                     channel.sent_by[BOB], rounds, tuples, tuple_cost, per_phase_sent,
                     dict(sorted(channel.ledger.per_phase.items())), seed, kids, checks,
                     tuple(violations), learned, decoded)


def run_known_l(M, delta, adversary: Adversary | None = None, seed: int = 0,
                max_rounds: int | None = None, record: bool = False,
                code: CodeParams = DEFAULT_PARAMS, return_channel: bool = False):
    """Simulate one run in which both parties know ``L = len(M)``.

    Parameters
    ----------
    M : bit array
        Alice's message.
    delta : float or Fraction
    adversary : Adversary, optional
        Defaults to the passive adversary.
    seed : int
        Master seed; Alice, Bob and the adversary each get a child stream.
    max_rounds : int, optional
        Abort guard, default ``64 d``. Aborted runs report ``failure="incomplete"``.
    record : bool
        Keep the per-step transcript on the channel.
    return_channel : bool
        Also return the channel (for transcripts).

    Returns
    -------
    RunReport
    """
    M = as_bits(M)
    params = derive_params(M.size, delta, code)
    adversary = adversary if adversary is not None else Adversary()
    (rng_a, rng_b, rng_adv), kids = _child_rngs(seed, 3)
    channel = Channel(adversary, params.public(), M, record)
    adversary.reset(params.public(), M, rng_adv)
    mr = default_max_rounds(params) if max_rounds is None else max_rounds
    res = _simulate(M, params, params, rng_a, rng_b, channel, "", mr)
    rep = _report(res.success, res.failure, params.L, params.delta, channel, res.rounds,
                  res.tuples_sent, res.tuple_round_cost, seed, kids, res.bad_tuple_checks,
                  res.bad_tuple_violations, decoded=res.decoded)
    return (rep, channel) if return_channel else rep


def length_header(L: int) -> np.ndarray:
    """64-bit big-endian encoding of ``L``."""
    if not 0 <= L < 1 << HEADER_BITS:
        raise ValueError(f"message length {L} needs more than {HEADER_BITS} bits")
    return int_to_bits(L, HEADER_BITS)[::-1].copy()


def parse_length_header(bits) -> int:
    return bits_to_int(as_bits(bits)[::-1])


def run_unknown_l(M, delta, adversary: Adversary | None = None, seed: int = 0,
                  max_rounds: int | None = None, record: bool = False,
                  code: CodeParams = DEFAULT_PARAMS, return_channel: bool = False,
                  max_length: int = 1 << 20):
    """Two-phase run: send the 64-bit length header, then the message.

    Each phase runs the known-length protocol at ``delta / 2`` on the same
    channel. A phase failure, or a learned length that differs from
    ``len(M)``, is an overall failure.

    Parameters
    ----------
    max_length : int
        Largest learned length the simulated Bob will accept in phase 2.
    """
    M = as_bits(M)
    L = M.size
    if L < 1:
        raise ValueError("message must be non-empty")
    header = length_header(L)
    half = _delta(delta) / 2
    p1 = derive_params(HEADER_BITS, half, code)
    p2 = derive_params(L, half, code)
    adversary = adversary if adversary is not None else Adversary()
    (ra1, rb1, ra2, rb2, rng_adv), kids = _child_rngs(seed, 5)
    channel = Channel(adversary, {"stage": "length", **p1.public()}, M, record)
    adversary.reset({"length": p1.public(), "message": p2.public()}, M, rng_adv)

    mr1 = default_max_rounds(p1) if max_rounds is None else max_rounds
    r1 = _simulate(header, p1, p1, ra1, rb1, channel, "length", mr1)
    learned = parse_length_header(r1.decoded) if r1.decoded is not None else None
    rounds, tuples, tcost = r1.rounds, r1.tuples_sent, r1.tuple_round_cost
    checks, viol = r1.bad_tuple_checks, list(r1.bad_tuple_violations)
    if not r1.success:
        rep = _report(False, f"length:{r1.failure}", L, _delta(delta), channel, rounds, tuples,
                      tcost, seed, kids, checks, viol, learned)
        return (rep, channel) if return_channel else rep
    if learned != L or not 1 <= learned <= max_length:
        rep = _report(False, "length_mismatch", L, _delta(delta), channel, rounds, tuples,
                      tcost, seed, kids, checks, viol, learned)
        return (rep, channel) if return_channel else rep

    mr2 = default_max_rounds(p2) if max_rounds is None else max_rounds
    r2 = _simulate(M, p2, derive_params(learned, half, code), ra2, rb2, channel, "message", mr2)
    rep = _report(r2.success, "" if r2.success else f"message:{r2.failure}", L, _delta(delta),
                  channel, rounds + r2.rounds, tuples + r2.tuples_sent,
                  tcost + r2.tuple_round_cost, seed, kids, checks + r2.bad_tuple_checks,
                  viol + list(r2.bad_tuple_violations), learned, r2.decoded)
    return (rep, channel) if return_channel else rep


# analytic bounds

def zero_noise_cost(params: ProtocolParams) -> int:
    """Exact bits sent by a run with no adversary."""
    return (params.d + 1) * params.k + 2 * round_params(1, params).b


def cost_lower_bound_f(m: int, params: ProtocolParams) -> int:
    """Least number of flips that can make ``m`` of Bob's tuples bad.

    Plaintext tuples cost one flip each. Encoded tuples arrive in pairs, and
    spoiling the pair of round ``j`` takes at least ``rho`` times the encoded
    evaluation length. The cheapest rounds come first.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    if m <= params.d + 1:
        return m
    pairs = -(-(m - params.d - 1) // 2)
    total = Fraction(params.d + 1)
    for j in range(1, pairs + 1):
        level = min(j // params.d, params.max_level)
        total += params.rho * params.sizes(level).eval_enc_len
    return ceil(total)


def cost_upper_bound_g(m: int, params: ProtocolParams) -> Fraction:
    """Upper bound on the bits needed to deliver ``m`` tuples."""
    d = params.d
    if m < d + 1:
        return Fraction(m * params.k)
    return params.L + 5 * params.C * (Fraction(m - d - 1, 2) * params.lambda0
                                      + Fraction((m - d + 1) ** 2, 8 * d))


def g_slack(params: ProtocolParams) -> int:
    """Padding bits of round 0 beyond ``L`` (the g bound assumes exactly ``L``)."""
    return (params.d + 1) * params.k - params.L


def log_ceil(x) -> int:
    return max(ceil_log2(x), 1)


def headline_bound(L: int, T: int, delta, c1, c2, c3) -> float:
    """``L + c1 T + c2 min(T+1, L/log L) ceil(log2(L/delta)) + c3``."""
    delta = _delta(delta)
    cap = Fraction(L, log_ceil(L))
    return float(L + c1 * T + c2 * min(T + 1, cap) * log_ceil(Fraction(L) / delta) + c3)
