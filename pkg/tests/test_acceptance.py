"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``criterion N: PASS`` or ``criterion N: FAIL`` line with
the measured numbers before asserting. The full-grid sweep behind criteria
2, 3, 4 and 9 runs once per module (about a quarter of an hour on one core).
"""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from unknown_noise.adversaries import BUNDLED
from unknown_noise.blockcode import ec_decode, ec_encode
from unknown_noise.field import gf
from unknown_noise.harness import (
    DEFAULT_DELTAS, DEFAULT_LS, HEADLINE_CONSTANTS, ExperimentConfig, SweepResult,
    check_cost_bounds, fit_headline, read_csv, replay_transcript, run_sweep, validate_silence_bound,
)
from unknown_noise.integrity import (
    FingerprintSeed, amd_decode, amd_encode, amd_length, fingerprint, is_codeword,
)
from unknown_noise.protocol import derive_params, round_params, run_known_l
from unknown_noise.rscode import Polynomial, evaluate_many, get_polynomial

TRIALS = 1000
N_ARCHIVED = 100


@pytest.fixture
def say(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
    return emit


def three_sigma(p, n):
    return p + 3 * math.sqrt(p * (1 - p) / n)


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    """Full grid, every bundled strategy, 1000 trials per cell.

    Runs one L at a time so the L = 1000 block can be timed on its own.
    A seeded sample of 100 row indices is archived with transcripts.
    """
    root = tmp_path_factory.mktemp("acceptance")
    per_l = len(DEFAULT_DELTAS) * len(BUNDLED) * TRIALS
    picks = np.random.default_rng(2024).choice(per_l * len(DEFAULT_LS), N_ARCHIVED, replace=False)
    rows, archive, seconds = [], {}, {}
    for i, L in enumerate(DEFAULT_LS):
        local = {int(g) - i * per_l: str(root / f"row{int(g)}.csv")
                 for g in picks if i * per_l <= g < (i + 1) * per_l}
        cfg = ExperimentConfig(Ls=(L,), deltas=DEFAULT_DELTAS, adversaries=BUNDLED, trials=TRIALS)
        t0 = time.perf_counter()
        res = run_sweep(cfg, archive=local)
        seconds[L] = time.perf_counter() - t0
        archive.update({len(rows) + k: v for k, v in local.items()})
        rows.extend(res.rows)
    full = SweepResult(ExperimentConfig(Ls=DEFAULT_LS, deltas=DEFAULT_DELTAS,
                                        adversaries=BUNDLED, trials=TRIALS, out=str(root / "s.csv")),
                       rows)
    full.to_csv(full.config.out)
    return full, archive, seconds


def test_criterion_1_zero_noise_exact_cost(say):
    details, ok = [], True
    for L in (64, 256, 1000):
        M = np.random.default_rng(L).integers(0, 2, L).astype(np.uint8)
        t0 = time.perf_counter()
        rep = run_known_l(M, Fraction(1, 100), seed=L)
        dt = time.perf_counter() - t0
        p = derive_params(L, Fraction(1, 100))
        expect = (p.d + 1) * p.k + 2 * round_params(1, p).b
        good = (rep.success and np.array_equal(rep.decoded, M) and rep.total_sent == expect
                and dt < 1.0)
        ok &= good
        details.append(f"L={L}: sent {rep.total_sent} expected {expect} in {dt * 1e3:.1f} ms")
    say(1, ok, "; ".join(details))
    assert ok


def test_criterion_2_failure_probability(sweep, say):
    full, _, seconds = sweep
    cells = [c for c in full.cells() if c["L"] == 1000]
    bad = [c for c in cells if not c["rateOk"]]
    worst = max(cells, key=lambda c: c["failureRate"] / c["limit"])
    ok = len(cells) == 2 * len(BUNDLED) and not bad and seconds[1000] < 300
    say(2, ok, f"{len(cells)} cells x {TRIALS} trials, {len(bad)} over delta+3 sigma, worst "
               f"{worst['adversary']} delta={worst['delta']}: {worst['failures']} failures "
               f"({worst['incomplete']} incomplete) vs limit {worst['limit']:.4f}, "
               f"{seconds[1000]:.0f} s")
    assert ok, bad


def test_criterion_3_headline_bound(sweep, say):
    full, _, _ = sweep
    fit_rows = [r for r in full.rows if r["L"] == 256]
    grid = [(L, d) for L in DEFAULT_LS for d in DEFAULT_DELTAS]
    fitted = fit_headline(fit_rows, grid)
    audit = check_cost_bounds(full.rows, fitted)
    n_viol = len(audit["headline_violations"])
    ok = n_viol == 0
    say(3, ok, f"fitted (c1, c2, c3) = {fitted}, frozen {HEADLINE_CONSTANTS}; "
               f"{n_viol} violations over {audit['rows']} rows")
    assert fitted == HEADLINE_CONSTANTS
    assert ok, audit["headline_violations"][:10]


def test_criterion_4_bad_tuple_invariant(sweep, say):
    rows = [r for r in sweep[0].rows if r["L"] == 1000]
    checks = sum(r["badTupleChecks"] for r in rows)
    viol = sum(r["badTupleViolations"] for r in rows)
    unchecked = sum(1 for r in rows if r["badTupleChecks"] < 1)
    ok = viol == 0 and unchecked == 0
    say(4, ok, f"{checks} round checks over {len(rows)} trials, {viol} violations")
    assert ok


def test_criterion_5_silence_bound(say):
    t0 = time.perf_counter()
    recs = validate_silence_bound((71, 100, 150), samples=10**6, seed=0)
    dt = time.perf_counter() - t0
    ok = all(r["ok"] for r in recs) and dt < 60
    say(5, ok, ", ".join(f"b={r['b']}: {r['observed']:.2e} <= {r['bound']:.2e}" for r in recs)
        + f", {dt:.1f} s")
    assert ok


def _corruptions(n, d, rng):
    """Bad-point sets with ``n - b > b + d`` and their error values.

    Every error vector is enumerated for ``b <= 2``. For larger ``b`` each
    bad point in turn takes all 15 nonzero values while the others are
    drawn at random.
    """
    for b in itertools.count():
        if n - b <= b + d:
            return
        for bad in itertools.combinations(range(n), b):
            if b <= 2:
                yield from ((bad, vals) for vals in itertools.product(range(1, 16), repeat=b))
                continue
            for i in range(b):
                base = rng.integers(1, 16, b)
                for v in range(1, 16):
                    base[i] = v
                    yield bad, tuple(int(x) for x in base)


def test_criterion_6_decoding_exhaustive(say):
    F = gf(4)
    rng = np.random.default_rng(6)
    total = wrong = 0
    for d in range(4):
        P = Polynomial(tuple(int(c) for c in rng.integers(0, 16, d + 1)), F)
        for n in range(d + 1, 11):
            xs = list(range(n))
            ys = [int(y) for y in evaluate_many(P, xs)]
            for bad, vals in _corruptions(n, d, rng):
                y = list(ys)
                for i, v in zip(bad, vals):
                    y[i] ^= v
                total += 1
                wrong += get_polynomial(list(zip(xs, y)), d, F) != P
    ok = wrong == 0
    say(6, ok, f"GF(16), d <= 3, n <= 10: {total - wrong}/{total} patterns decoded to P")
    assert ok


def test_criterion_7_primitives(say):
    rng = np.random.default_rng(7)
    # block code roundtrip
    rt = all(np.array_equal(ec_decode(ec_encode(m), length=m.size), m)
             for m in (rng.integers(0, 2, int(rng.integers(1, 2000))).astype(np.uint8)
                       for _ in range(1000)))
    # random flips strictly below the radius of a one-block codeword
    corrected = 0
    for _ in range(10**4):
        m = rng.integers(0, 2, int(rng.integers(1, 400))).astype(np.uint8)
        c = ec_encode(m)
        w = math.ceil(Fraction(1, 8) * c.size) - 1
        e = np.zeros(c.size, np.uint8)
        e[rng.choice(c.size, int(rng.integers(0, w + 1)), replace=False)] = 1
        corrected += np.array_equal(ec_decode(c ^ e, length=m.size), m)
    # AMD roundtrip
    eta = Fraction(1, 64)
    amd_rt = all(np.array_equal(amd_decode(amd_encode(m, eta, rng).to_bits(), eta), m)
                 for m in (rng.integers(0, 2, int(rng.integers(1, 300))).astype(np.uint8)
                           for _ in range(1000)))
    # tamper acceptance: 100 fixed offsets x 1000 encodings
    m = rng.integers(0, 2, 48).astype(np.uint8)
    n_bits = amd_length(m.size, eta)
    hits = 0
    for _ in range(100):
        sigma = rng.integers(0, 2, n_bits).astype(np.uint8)
        sigma[int(rng.integers(n_bits))] = 1
        hits += sum(is_codeword(amd_encode(m, eta, rng).to_bits() ^ sigma, eta)
                    for _ in range(1000))
    amd_rate, amd_lim = hits / 10**5, three_sigma(float(eta), 10**5)
    # fingerprint collisions on a fixed pair of distinct messages
    p, ell = Fraction(1, 2**10), 64
    a = rng.integers(0, 2, ell).astype(np.uint8)
    b = a.copy()
    b[5] ^= 1
    coll = 0
    for _ in range(10**5):
        s = FingerprintSeed.sample(rng, ell, p)
        coll += fingerprint(s, a, p, ell) == fingerprint(s, b, p, ell)
    fp_rate, fp_lim = coll / 10**5, three_sigma(float(p), 10**5)
    ok = rt and corrected == 10**4 and amd_rt and amd_rate <= amd_lim and fp_rate <= fp_lim
    say(7, ok, f"ec roundtrip {rt}, corrected {corrected}/10000, amd roundtrip {amd_rt}, "
               f"tamper {amd_rate:.2e} <= {amd_lim:.2e}, collisions {fp_rate:.2e} <= {fp_lim:.2e}")
    assert ok


def test_criterion_8_unknown_length(say):
    cfg = ExperimentConfig(Ls=(256, 1000), deltas=DEFAULT_DELTAS, adversaries=BUNDLED,
                           trials=TRIALS, mode="unknown")
    res = run_sweep(cfg)
    cells = res.cells()
    bad = [c for c in cells if not c["rateOk"]]
    wrong_l = sum(1 for r in res.rows if r["success"] and r["learnedL"] != r["L"])
    fails = sum(c["failures"] for c in cells)
    ok = not bad and wrong_l == 0
    say(8, ok, f"{len(cells)} cells x {TRIALS} trials, {fails} failures, {len(bad)} cells over "
               f"delta+3 sigma, {wrong_l} successful runs with a wrong learned L")
    assert ok, bad


def test_criterion_9_replay(sweep, say):
    full, archive, _ = sweep
    rows = read_csv(full.config.out)
    same = 0
    for idx, path in sorted(archive.items()):
        with open(path, encoding="utf-8", newline="") as fh:
            same += replay_transcript(rows[idx]) == fh.read()
    ok = len(archive) == N_ARCHIVED and same == N_ARCHIVED
    say(9, ok, f"{same}/{len(archive)} archived transcripts reproduced byte-for-byte")
    assert ok
