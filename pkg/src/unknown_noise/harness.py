"""Experiment runner: sweeps, Monte Carlo checks, cost-bound audits and replay.

A sweep runs every combination of (adversary, L, delta) for ``trials`` seeds
and produces one row per run. Row ``i`` of a cell uses run seed
``config.seed + i`` and the message :func:`trial_message` ``(L, seed)``, so a
row alone is enough to regenerate its run bit for bit.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .adversaries import ConfigError, canonical_name, make_adversary
from .channel import alternations
from .protocol import (
    _delta, cost_upper_bound_g, derive_params, g_slack, headline_bound, log_ceil, run_known_l,
    run_unknown_l, zero_noise_cost,
)

SWEEP_COLUMNS = (
    "L", "delta", "adversary", "seed", "T", "totalSent", "rounds", "success", "boundSatisfied",
    "failure", "mode", "totalSentAlice", "totalSentBob", "tuplesSent", "tupleRoundCost",
    "gBound", "gSatisfied", "headlineBound", "badTupleChecks", "badTupleViolations", "learnedL",
    "perPhaseSent", "perPhaseFlips", "version",
)

# (c1, c2, c3) of the headline bound: fit_headline on the L = 256 rows of the
# default grid (all bundled strategies, seeds 0..999), extended to L up to 4096
HEADLINE_CONSTANTS = (0, 245, 8)

DEFAULT_LS = (64, 256, 1000, 4096)
DEFAULT_DELTAS = ("0.1", "0.01")
MODES = ("known", "unknown")


class ReplayError(RuntimeError):
    """A row cannot be replayed by this build (version or configuration mismatch)."""


def trial_message(L: int, seed: int) -> np.ndarray:
    """The message used by the sweep row with length ``L`` and run seed ``seed``."""
    rng = np.random.default_rng([int(seed), int(L), 0x4D])
    return rng.integers(0, 2, size=int(L), dtype=np.uint8)


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: the grid, the trial count and the output path.

    Parameters
    ----------
    Ls : tuple of int
    deltas : tuple of str
        Kept as strings so that the CSV and replay see the exact rational.
    adversaries : tuple of str
        Strategy specs such as ``"budgeted_random:50"``.
    trials : int
    seed : int
        First run seed of every cell.
    max_rounds : int, optional
        Abort guard; ``None`` means ``64 d``.
    out : str, optional
        CSV path.
    mode : {"known", "unknown"}
    """

    Ls: tuple = DEFAULT_LS
    deltas: tuple = DEFAULT_DELTAS
    adversaries: tuple = ("null",)
    trials: int = 1000
    seed: int = 0
    max_rounds: int | None = None
    out: str | None = None
    mode: str = "known"
    constants: tuple = HEADLINE_CONSTANTS

    def __post_init__(self):
        Ls = tuple(int(L) for L in _as_tuple(self.Ls))
        deltas = tuple(str(d) for d in _as_tuple(self.deltas))
        advs = tuple(str(a) for a in _as_tuple(self.adversaries))
        if not Ls or any(L < 1 for L in Ls):
            raise ConfigError(f"message lengths must be positive, got {Ls}")
        for d in deltas:
            try:
                _delta(Fraction(d))
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"bad delta {d!r}: {exc}") from exc
        if int(self.trials) < 1:
            raise ConfigError("trials must be at least 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.max_rounds is not None and int(self.max_rounds) < 1:
            raise ConfigError("max_rounds must be positive")
        for a in advs:
            make_adversary(a)  # fail early on unknown names
        object.__setattr__(self, "Ls", Ls)
        object.__setattr__(self, "deltas", deltas)
        object.__setattr__(self, "adversaries", advs)
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def size(self) -> int:
        return len(self.Ls) * len(self.deltas) * len(self.adversaries) * self.trials


def _as_tuple(v) -> tuple:
    if isinstance(v, (str, int, float, Fraction)):
        return (v,)
    return tuple(v)


# config files

_KEYS = {"l": "Ls", "ls": "Ls", "delta": "deltas", "deltas": "deltas", "adversary": "adversaries",
         "adversaries": "adversaries", "trials": "trials", "seed": "seed",
         "max-rounds": "max_rounds", "max_rounds": "max_rounds", "out": "out", "mode": "mode"}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines (``#`` starts a comment) into config fields.

    List-valued keys (``L``, ``delta``) take comma-separated values. Adversary
    specs may contain commas, so several adversaries are separated by ``;``.
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            key, _, value = line.partition(":")
            if not _:
                raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        name = _KEYS.get(key.strip().lower().lstrip("-"))
        if name is None:
            raise ConfigError(f"line {lineno}: unknown key {key.strip()!r}")
        value = value.strip()
        if name == "Ls":
            out[name] = tuple(int(v) for v in value.split(",") if v.strip())
        elif name == "deltas":
            out[name] = tuple(v.strip() for v in value.split(",") if v.strip())
        elif name == "adversaries":
            out[name] = tuple(v.strip() for v in value.split(";") if v.strip())
        elif name in ("trials", "seed", "max_rounds"):
            out[name] = int(value)
        else:
            out[name] = value
    return out


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Read a config file (optional) and apply overrides; ``None`` overrides are ignored."""
    fields = parse_config_text(Path(path).read_text(encoding="utf-8")) if path else {}
    fields.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**fields)


# sweeps

@dataclass
class SweepResult:
    """Rows of a sweep plus per-cell aggregation."""

    config: ExperimentConfig
    rows: list = field(default_factory=list)

    def cells(self) -> list[dict]:
        """Failure counts and cost statistics per (adversary, L, delta)."""
        groups = {}
        for r in self.rows:
            groups.setdefault((r["adversary"], r["L"], r["delta"]), []).append(r)
        out = []
        for (adv, L, delta), rs in groups.items():
            n = len(rs)
            fails = sum(1 for r in rs if not r["success"])
            d = float(Fraction(delta))
            sigma = math.sqrt(d * (1 - d) / n)
            sent = np.array([r["totalSent"] for r in rs], dtype=float)
            out.append({
                "adversary": adv, "L": L, "delta": delta, "trials": n, "failures": fails,
                "incomplete": sum(1 for r in rs if r["failure"].endswith("incomplete")),
                "failureRate": fails / n, "limit": d + 3 * sigma,
                "rateOk": fails / n <= d + 3 * sigma,
                "meanSent": float(sent.mean()), "maxSent": int(sent.max()),
                "meanT": float(np.mean([r["T"] for r in rs])),
                "meanRounds": float(np.mean([r["rounds"] for r in rs])),
                "boundViolations": sum(1 for r in rs if not r["boundSatisfied"]),
                "badTupleViolations": sum(r["badTupleViolations"] for r in rs),
            })
        return out

    def to_csv(self, path=None) -> str:
        text = rows_to_csv(self.rows)
        if path is not None:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


_INT_COLUMNS = ("L", "seed", "T", "totalSent", "rounds", "success", "boundSatisfied",
                "totalSentAlice", "totalSentBob", "tuplesSent", "tupleRoundCost", "gSatisfied",
                "badTupleChecks", "badTupleViolations")


def read_csv(path) -> list[dict]:
    """Rows of a sweep CSV with numeric columns converted back to ints."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k in _INT_COLUMNS:
            if k in r and r[k] != "":
                r[k] = int(r[k])
    return rows


def _phase_string(d: dict) -> str:
    return ";".join(f"{k}={v}" for k, v in sorted(d.items()))


def run_trial(L: int, delta: str, adversary: str, seed: int, mode: str = "known",
              max_rounds=None, record: bool = False):
    """Run the trial behind one sweep row. Returns ``(report, channel)``."""
    M = trial_message(L, seed)
    runner = run_known_l if mode == "known" else run_unknown_l
    return runner(M, Fraction(delta), make_adversary(adversary), seed=seed,
                  max_rounds=max_rounds, record=record, return_channel=True)


def make_row(rep, adversary: str, mode: str, constants=HEADLINE_CONSTANTS) -> dict:
    """Flatten a run report into a sweep row, with both bound checks filled in."""
    params = derive_params(rep.L, rep.delta / 2 if mode == "unknown" else rep.delta)
    g = cost_upper_bound_g(rep.tuples_sent, params) + g_slack(params)
    head = headline_bound(rep.L, rep.T, rep.delta, *constants)
    return {
        "L": rep.L, "delta": str(rep.delta), "adversary": adversary, "seed": rep.seed,
        "T": rep.T, "totalSent": rep.total_sent, "rounds": rep.rounds,
        "success": int(rep.success), "boundSatisfied": int(rep.total_sent <= head),
        "failure": rep.failure, "mode": mode, "totalSentAlice": rep.total_sent_alice,
        "totalSentBob": rep.total_sent_bob, "tuplesSent": rep.tuples_sent,
        "tupleRoundCost": rep.tuple_round_cost, "gBound": f"{float(g):.1f}",
        "gSatisfied": int(mode == "unknown" or rep.tuple_round_cost <= g),
        "headlineBound": f"{head:.1f}", "badTupleChecks": rep.bad_tuple_checks,
        "badTupleViolations": len(rep.bad_tuple_violations),
        "learnedL": "" if rep.learned_L is None else rep.learned_L,
        "perPhaseSent": _phase_string(rep.per_phase_sent),
        "perPhaseFlips": _phase_string(rep.per_phase_flips), "version": __version__,
    }


def run_sweep(config: ExperimentConfig, archive: dict | None = None, progress=None) -> SweepResult:
    """Run every trial of ``config``; writes the CSV when ``config.out`` is set.

    Parameters
    ----------
    archive : dict, optional
        Maps row indices to file paths. Those rows are run with transcript
        recording and their transcripts written to the given paths.
    progress : callable, optional
        Called as ``progress(done, total)`` after every row.
    """
    archive = archive or {}
    result = SweepResult(config)
    idx = 0
    for adv in config.adversaries:
        for L in config.Ls:
            for delta in config.deltas:
                for t in range(config.trials):
                    seed = config.seed + t
                    record = idx in archive
                    rep, ch = run_trial(L, delta, adv, seed, config.mode, config.max_rounds, record)
                    result.rows.append(make_row(rep, adv, config.mode, config.constants))
                    if record:
                        _write_text(archive[idx], ch.transcript_csv())
                    idx += 1
                    if progress is not None:
                        progress(idx, config.size)
    if config.out:
        result.to_csv(config.out)
    return result


def _write_text(path, text: str):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# silence statistics

def alternation_bound(b: int) -> float:
    """``exp(-b / 19)``: bound on the chance that ``b`` random bits look silent."""
    return math.exp(-b / 19)


def _silent_fraction(b: int, samples: int, rng: np.random.Generator, chunk: int = 1 << 16) -> float:
    hits, done = 0, 0
    while done < samples:
        n = min(chunk, samples - done)
        bits = np.unpackbits(rng.integers(0, 256, size=(n, (b + 7) // 8), dtype=np.uint8),
                             axis=1)[:, :b]
        alts = np.count_nonzero(bits[:, 1:] != bits[:, :-1], axis=1)
        hits += int(np.count_nonzero(3 * alts < b))
        done += n
    return hits / samples


def validate_silence_bound(b_values=(71, 100, 150), samples: int = 10**6, seed: int = 0) -> list[dict]:
    """Monte Carlo estimate of how often ``b`` uniform bits read as silence.

    Returns one record per ``b`` with the observed fraction, the analytic
    bound and whether the observation respects it.
    """
    rng = np.random.default_rng(seed)
    out = []
    for b in b_values:
        if b < 71:
            raise ValueError(f"the bound is only claimed for b >= 71, got {b}")
        frac = _silent_fraction(int(b), int(samples), rng)
        bound = alternation_bound(b)
        out.append({"b": int(b), "samples": int(samples), "observed": frac, "bound": bound,
                    "ok": frac <= bound})
    return out


def alternation_census(b: int = 10) -> dict:
    """Exhaustive check of the alternation counter on all ``2**b`` strings.

    A string with ``a`` alternations is fixed by its first bit and the
    ``a`` change positions, so the census must be ``2 * C(b-1, a)``.
    """
    counts = np.zeros(b, dtype=np.int64)
    for v in range(1 << b):
        s = np.array([(v >> i) & 1 for i in range(b)], dtype=np.uint8)
        a = alternations(s)
        naive = sum(1 for i in range(b - 1) if s[i] != s[i + 1])
        if a != naive:
            raise AssertionError(f"alternation counter disagrees on {s}")
        counts[a] += 1
    expected = [2 * math.comb(b - 1, a) for a in range(b)]
    silent = int(sum(counts[a] for a in range(b) if 3 * a < b))
    return {"b": b, "counts": counts.tolist(), "expected": expected,
            "ok": counts.tolist() == expected, "silent": silent}


# cost bounds

def check_cost_bounds(rows, constants=HEADLINE_CONSTANTS) -> dict:
    """Audit every row against the tuple-cost bound g and the headline bound.

    The g check compares the bits spent in round 0 and in the rounds that
    delivered evaluations against ``g(tuplesSent)`` plus the round-0 padding.
    Violations carry everything needed to replay the run.
    """
    g_viol, h_viol = [], []
    for r in rows:
        mode = r.get("mode", "known")
        delta = Fraction(r["delta"])
        key = {k: r[k] for k in ("L", "delta", "adversary", "seed")} | {"mode": mode}
        if mode == "known":
            params = derive_params(int(r["L"]), delta)
            g = cost_upper_bound_g(int(r["tuplesSent"]), params) + g_slack(params)
            if int(r["tupleRoundCost"]) > g:
                g_viol.append(key | {"cost": int(r["tupleRoundCost"]), "bound": float(g)})
        head = headline_bound(int(r["L"]), int(r["T"]), delta, *constants)
        if int(r["totalSent"]) > head:
            h_viol.append(key | {"totalSent": int(r["totalSent"]), "bound": head})
    return {"rows": len(rows), "g_violations": g_viol, "headline_violations": h_viol,
            "ok": not g_viol and not h_viol}


def headline_features(L: int, T: int, delta) -> tuple:
    """``(T, min(T+1, L/log L) * ceil(log(L/delta)), 1)`` for one row."""
    delta = _delta(delta)
    cap = Fraction(L, log_ceil(L))
    return (T, min(Fraction(T + 1), cap) * log_ceil(Fraction(L) / delta), 1)


def realized_scale(L: int, delta) -> Fraction:
    """Zero-noise overhead per unit of ``ceil(log(L/delta))`` at ``(L, delta)``.

    This is the cost of one fingerprint/echo exchange measured in the unit of
    the headline bound, computed from the realized parameters only.
    """
    params = derive_params(L, delta)
    return Fraction(zero_noise_cost(params) - L, log_ceil(Fraction(L) / params.delta))


def fit_headline(rows, grid=None) -> tuple:
    """Fit ``(c1, c2, c3)`` on sweep rows, then extend them to a grid.

    ``c3`` is the largest round-0 padding ``(d+1) log q - L`` over the grid.
    ``(c1, c2)`` solve a linear program on the fitting rows: the least total
    bound such that every fitting row satisfies it. Both are then multiplied
    by the largest ratio between the realized per-exchange overhead of a grid
    cell and that of the fitting cells (see :func:`realized_scale`). Only
    realized parameters enter the extension, never the other rows.

    Parameters
    ----------
    rows : sequence of dict
        Sweep rows used for the fit.
    grid : iterable of (L, delta), optional
        Cells the constants must carry over to. Defaults to the fit cells.

    Returns
    -------
    tuple of int
    """
    from scipy.optimize import linprog

    fit_cells = {(int(r["L"]), str(Fraction(r["delta"]))) for r in rows}
    cells = fit_cells if grid is None else {(int(L), str(Fraction(str(d)))) for L, d in grid}
    c3 = max(g_slack(derive_params(L, Fraction(d))) for L, d in cells | fit_cells)
    X = np.array([[float(v) for v in headline_features(int(r["L"]), int(r["T"]), r["delta"])[:2]]
                  for r in rows])
    y = np.array([int(r["totalSent"]) - int(r["L"]) - c3 for r in rows], dtype=float)
    res = linprog(X.sum(axis=0), A_ub=-X, b_ub=-y, bounds=[(0, None)] * 2, method="highs")
    if not res.success:
        raise RuntimeError(f"headline fit failed: {res.message}")
    base = min(realized_scale(L, Fraction(d)) for L, d in fit_cells)
    scale = max(Fraction(1), max(realized_scale(L, Fraction(d)) for L, d in cells) / base)
    c1, c2 = (math.ceil(Fraction(v).limit_denominator(10**6) * scale) for v in res.x)
    return (c1, c2, c3)


# replay

def transcript_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def replay_transcript(row: dict, out=None, max_rounds=None) -> str:
    """Regenerate the channel transcript of a sweep row.

    Raises
    ------
    ReplayError
        If the row was produced by another version, names an unknown
        adversary, or the regenerated run disagrees with the row's summary.
    """
    version = row.get("version", __version__)
    if version != __version__:
        raise ReplayError(f"row was produced by version {version}, this is {__version__}")
    try:
        adv = row["adversary"]
        canonical_name(adv.partition(":")[0])
        L, seed, mode = int(row["L"]), int(row["seed"]), row.get("mode", "known") or "known"
        rep, ch = run_trial(L, str(row["delta"]), adv, seed, mode, max_rounds, record=True)
    except (KeyError, ValueError, ConfigError) as exc:
        raise ReplayError(f"row cannot be replayed: {exc}") from exc
    for key, got in (("T", rep.T), ("totalSent", rep.total_sent), ("rounds", rep.rounds)):
        if key in row and row[key] != "" and int(row[key]) != got:
            raise ReplayError(f"replayed {key}={got} differs from the row ({row[key]})")
    text = ch.transcript_csv()
    if out is not None:
        _write_text(out, text)
    return text


def with_constants(config: ExperimentConfig, constants) -> ExperimentConfig:
    return replace(config, constants=tuple(constants))


__all__ = [
    "HEADLINE_CONSTANTS", "SWEEP_COLUMNS", "ExperimentConfig", "ReplayError", "SweepResult",
    "alternation_bound", "alternation_census", "check_cost_bounds", "fit_headline",
    "headline_features", "load_config", "parse_config_text", "read_csv", "realized_scale",
    "replay_transcript", "run_sweep", "run_trial", "rows_to_csv", "trial_message",
    "transcript_digest", "validate_silence_bound", "make_row", "with_constants",
]
