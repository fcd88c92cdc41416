import itertools
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from unknown_noise.field import gf
from unknown_noise.rscode import (
    CapacityError, EvaluationTuple, InsufficientPointsError, Polynomial, TupleMultiset, evaluate,
    evaluate_many, evaluation_point, get_polynomial, interpolate, majority_filter, pack_message,
    unpack_message,
)


def naive_eval(coeffs, x, F):
    return xor_all(F.mul(c, F.pow(x, i)) for i, c in enumerate(coeffs))


def xor_all(values):
    out = 0
    for v in values:
        out ^= v
    return out


def best_support_oracle(points, d, F):
    """Enumerate every polynomial of degree <= d; most support, then least coefficients."""
    best, best_key = None, None
    for coeffs in itertools.product(range(F.order), repeat=d + 1):
        support = sum(1 for x, y in points if naive_eval(coeffs, x, F) == y)
        key = (-support, tuple(reversed(coeffs)))
        if best_key is None or key < best_key:
            best, best_key = coeffs, key
    return Polynomial(best, F)


# packing

def test_pack_example_l20_k10():
    F = gf(10)
    M = np.random.default_rng(0).integers(0, 2, 20).astype(np.uint8)
    P = pack_message(M, 1, F)
    assert P.coeffs[0] == sum(int(b) << i for i, b in enumerate(M[:10]))
    assert P.coeffs[1] == sum(int(b) << i for i, b in enumerate(M[10:]))


def test_zero_message_is_zero_polynomial():
    P = pack_message(np.zeros(37, np.uint8), 4, gf(8))
    assert P.coeffs == (0,) * 5
    assert unpack_message(P, 37).tolist() == [0] * 37


def test_pack_capacity():
    with pytest.raises(CapacityError):
        pack_message(np.ones(17, np.uint8), 1, gf(8))


def test_pack_roundtrip_many():
    F = gf(10)
    rnd = np.random.default_rng(1)
    for _ in range(1000):
        L = int(rnd.integers(1, 101))
        M = rnd.integers(0, 2, L).astype(np.uint8)
        d = -(-L // 10) - 1
        assert np.array_equal(unpack_message(pack_message(M, d, F), L), M)


def test_unpack_ignores_padding():
    F = gf(4)
    P = Polynomial((0b1111, 0b0011), F)
    assert unpack_message(P, 5).tolist() == [1, 1, 1, 1, 1]


# evaluation

def test_constant_and_identity():
    F = gf(4)
    assert all(evaluate(Polynomial((9,), F), x) == 9 for x in range(16))
    assert all(evaluate(Polynomial((0, 1), F), x) == x for x in range(16))


def test_degree3_all_points_match_oracle():
    F = gf(4)
    coeffs = (3, 14, 0, 7)
    P = Polynomial(coeffs, F)
    expect = [naive_eval(coeffs, x, F) for x in range(16)]
    assert [evaluate(P, x) for x in range(16)] == expect
    assert evaluate_many(P, range(16)).tolist() == expect


def test_evaluate_many_wide_and_large():
    for k, d in ((10, 99), (20, 5)):
        F = gf(k)
        rnd = random.Random(k)
        P = Polynomial([rnd.randrange(F.order) for _ in range(d + 1)], F)
        xs = [rnd.randrange(F.order) for _ in range(150)] + [0]
        assert evaluate_many(P, xs).tolist() == [evaluate(P, x) for x in xs]


def test_evaluation_points_cycle():
    F = gf(3)
    assert [evaluation_point(i, F) for i in (0, 7, 8, 9)] == [0, 7, 0, 1]


# majority filter

def test_majority_examples():
    assert majority_filter([(3, 5), (3, 5), (3, 7)]) == [EvaluationTuple(3, 5)]
    assert majority_filter([(3, 7), (3, 5)]) == [EvaluationTuple(3, 5)]
    assert majority_filter([]) == []


def test_multiset_counts():
    B = TupleMultiset([(1, 2), (1, 2), (0, 4)])
    assert len(B) == 3 and B.count(1, 2) == 2
    assert B.items() == [((0, 4), 1), ((1, 2), 2)]
    assert majority_filter(B) == [EvaluationTuple(0, 4), EvaluationTuple(1, 2)]


@given(st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7)), max_size=40))
def test_majority_one_per_x(pairs):
    out = majority_filter(pairs)
    assert [t.x for t in out] == sorted({x for x, _ in pairs})
    for t in out:
        ys = [y for x, y in pairs if x == t.x]
        assert ys.count(t.y) == max(ys.count(y) for y in ys)


# reconstruction

def test_exact_points_interpolate():
    F = gf(4)
    P = Polynomial((1, 2, 3), F)
    S = [(x, evaluate(P, x)) for x in (0, 5, 9)]
    assert get_polynomial(S, 2, F) == P
    assert interpolate(S, F) == P


def test_gf8_line_with_two_bad_points():
    F = gf(3)
    P = Polynomial((5, 3), F)
    S = [(x, evaluate(P, x)) for x in range(6)]
    S[1] = (1, S[1][1] ^ 4)
    S[4] = (4, S[4][1] ^ 1)
    assert get_polynomial(S, 1, F) == P == best_support_oracle(S, 1, F)


def test_tie_goes_to_least_coefficients():
    F = gf(3)
    # constants 6 and 2 both agree with two of four points
    S = [(0, 6), (1, 6), (2, 2), (3, 2)]
    assert get_polynomial(S, 0, F) == Polynomial((2,), F) == best_support_oracle(S, 0, F)
    # two lines, each through two points
    S = [(0, 1), (1, 0), (2, 5), (3, 7)]
    assert get_polynomial(S, 1, F) == best_support_oracle(S, 1, F)


def test_agrees_with_oracle_gf8():
    F = gf(3)
    rnd = random.Random(7)
    for _ in range(1500):
        d = rnd.randrange(3)
        n = rnd.randint(d + 1, 8)
        xs = rnd.sample(range(8), n)
        S = [(x, rnd.randrange(8)) for x in xs]
        if rnd.random() < 0.5:
            P = [rnd.randrange(8) for _ in range(d + 1)]
            S = [(x, naive_eval(P, x, F) if rnd.random() < 0.7 else y) for x, y in S]
        assert get_polynomial(S, d, F) == best_support_oracle(S, d, F)


@given(st.data())
def test_unique_decoding_gf16(data):
    F = gf(4)
    d = data.draw(st.integers(0, 4))
    n = data.draw(st.integers(d + 1, 16))
    coeffs = data.draw(st.lists(st.integers(0, 15), min_size=d + 1, max_size=d + 1))
    P = Polynomial(coeffs, F)
    xs = data.draw(st.permutations(range(16)))[:n]
    nbad = data.draw(st.integers(0, (n - d - 1) // 2))
    bad = set(xs[:nbad])
    S = []
    for x in xs:
        y = evaluate(P, x)
        if x in bad:
            y ^= data.draw(st.integers(1, 15))
        S.append((x, y))
    assert get_polynomial(S, d, F) == P


def test_large_instance_with_hint():
    F = gf(10)
    rnd = random.Random(3)
    d = 99
    P = Polynomial([rnd.randrange(1024) for _ in range(d + 1)], F)
    xs = list(range(300))
    bad = set(rnd.sample(xs, 100))
    S = [(x, evaluate(P, x) ^ (rnd.randrange(1, 1024) if x in bad else 0)) for x in xs]
    assert get_polynomial(S, d, F) == P
    assert get_polynomial(S, d, F, hint=P) == P
    wrong = Polynomial((1,) + P.coeffs[1:], F)
    assert get_polynomial(S, d, F, hint=wrong) == P


def test_wide_field_decoding():
    F = gf(20)
    rnd = random.Random(4)
    P = Polynomial([rnd.randrange(F.order) for _ in range(4)], F)
    S = [(x, evaluate(P, x)) for x in range(12)]
    S[2] = (2, S[2][1] ^ 1)
    S[7] = (7, S[7][1] ^ 99)
    assert get_polynomial(S, 3, F) == P


def test_fallback_beyond_unique_radius():
    F = gf(10)
    rnd = random.Random(5)
    d = 20
    S = [(x, rnd.randrange(1024)) for x in range(60)]
    out = get_polynomial(S, d, F)
    assert out == interpolate(S[: d + 1], F)


def test_errors():
    F = gf(3)
    with pytest.raises(InsufficientPointsError):
        get_polynomial([(0, 1)], 1, F)
    with pytest.raises(ValueError):
        get_polynomial([(0, 1), (0, 2)], 0, F)
