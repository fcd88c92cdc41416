import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from unknown_noise.bits import chunk_ints
from unknown_noise.field import gf
from unknown_noise.integrity import (
    AmdDecodeError, Fingerprint, FingerprintSeed, WidthError, amd_decode, amd_encode, amd_length,
    amd_parse, amd_width, fingerprint, fingerprint_width, hash_digest, is_codeword,
)


def three_sigma(p, n):
    return p + 3 * math.sqrt(p * (1 - p) / n)


def naive_tag(m, x, w):
    """``x**(D+2) + sum_i m_i x**i`` with chunks indexed from 1, by direct powers."""
    F = gf(w)
    chunks = chunk_ints(m, w)
    D = len(chunks) + (len(chunks) % 2 == 0)
    chunks += [0] * (D - len(chunks))
    acc = F.pow(x, D + 2)
    for i, c in enumerate(chunks, 1):
        acc ^= F.mul(c, F.pow(x, i))
    return acc


# fingerprints

def test_width_formula():
    assert fingerprint_width(1000, Fraction(1, 1024)) == 21  # ceil(log2(1024000)) + 1
    assert fingerprint_width(8, Fraction(1, 2)) == 5
    with pytest.raises(WidthError):
        fingerprint_width(2**40, Fraction(1, 2**30))


def test_digest_matches_definition():
    w = 9
    F = gf(w)
    m = np.random.default_rng(0).integers(0, 2, 40).astype(np.uint8)
    chunks = chunk_ints(np.concatenate([m, [1]]), w)
    r = 77
    expect = 0
    for i, c in enumerate(chunks):
        expect ^= F.mul(c, F.pow(r, i + 1))
    assert hash_digest(r, m, w) == expect


def test_fingerprint_deterministic_and_empty(rng):
    seed = FingerprintSeed.sample(rng, 64, Fraction(1, 2**10))
    m = rng.integers(0, 2, 64).astype(np.uint8)
    p = Fraction(1, 2**10)
    assert fingerprint(seed, m, p, 64) == fingerprint(seed, m, p, 64)
    e = fingerprint(seed, np.zeros(0, np.uint8), p, 64)
    assert e == fingerprint(seed, [], p, 64)
    assert e != fingerprint(seed, [0], p, 64)


def test_fingerprint_serialization(rng):
    p = Fraction(1, 100)
    seed = FingerprintSeed.sample(rng, 500, p)
    fp = fingerprint(seed, rng.integers(0, 2, 500), p, 500)
    bits = fp.to_bits()
    assert bits.size == 2 * fingerprint_width(500, p)
    assert Fingerprint.from_bits(bits) == fp


def test_fingerprint_rejects_long_message(rng):
    seed = FingerprintSeed.sample(rng, 8, Fraction(1, 4))
    with pytest.raises(ValueError):
        fingerprint(seed, np.ones(9, np.uint8), Fraction(1, 4), 8)


def test_collision_rate_monte_carlo():
    p = Fraction(1, 2**10)
    ell = 64
    rng = np.random.default_rng(3)
    corpus = [rng.integers(0, 2, ell).astype(np.uint8) for _ in range(3)]
    corpus.append(corpus[0][:-1])  # prefix: lengths differ
    n = 20_000
    for a, b in [(0, 1), (1, 2), (0, 3)]:
        hits = 0
        for _ in range(n):
            s = FingerprintSeed.sample(rng, ell, p)
            hits += fingerprint(s, corpus[a], p, ell) == fingerprint(s, corpus[b], p, ell)
        assert hits / n <= three_sigma(float(p), n)


# AMD

def test_width_is_least():
    for n_bits, eta in [(10, Fraction(1, 10)), (200, Fraction(1, 1000)), (1, Fraction(1, 2))]:
        w = amd_width(n_bits, eta)
        D = lambda w: (lambda c: c + (c % 2 == 0))(max(-(-n_bits // w), 1))  # noqa: E731
        assert Fraction(D(w) + 1, 2**w) <= eta
        assert w == 1 or Fraction(D(w - 1) + 1, 2 ** (w - 1)) > eta
        assert amd_length(n_bits, eta) == n_bits + 2 * w


def test_tag_matches_naive_polynomial(rng):
    for n_bits in (1, 7, 30, 64):
        m = rng.integers(0, 2, n_bits).astype(np.uint8)
        cw = amd_encode(m, Fraction(1, 50), rng)
        assert cw.tag_f == naive_tag(m, cw.tag_x, cw.width)


def test_roundtrip_many(rng):
    eta = Fraction(1, 100)
    for _ in range(1000):
        m = rng.integers(0, 2, int(rng.integers(1, 120))).astype(np.uint8)
        c = amd_encode(m, eta, rng).to_bits()
        assert c.size == amd_length(m.size, eta)
        assert is_codeword(c, eta)
        assert np.array_equal(amd_decode(c, eta), m)
        assert np.array_equal(amd_parse(c, eta).payload, m)


def test_all_zero_message(rng):
    m = np.zeros(40, np.uint8)
    c = amd_encode(m, Fraction(1, 10), rng)
    assert np.array_equal(amd_decode(c.to_bits(), Fraction(1, 10)), m)


def test_payload_flip_with_fixed_tags_is_rejected(rng):
    eta = Fraction(1, 100)
    m = rng.integers(0, 2, 50).astype(np.uint8)
    cw = amd_encode(m, eta, rng)
    for i in range(50):
        c = cw.to_bits().copy()
        c[i] ^= 1
        assert not is_codeword(c, eta)
        with pytest.raises(AmdDecodeError):
            amd_decode(c, eta)


def test_unparseable_length_rejected():
    assert amd_parse(np.zeros(1, np.uint8), Fraction(1, 2**20)) is None
    assert not is_codeword(np.zeros(3, np.uint8), Fraction(1, 2**20))


def test_tamper_acceptance_monte_carlo():
    eta = Fraction(1, 64)
    rng = np.random.default_rng(11)
    m = rng.integers(0, 2, 40).astype(np.uint8)
    n_bits = amd_length(40, eta)
    n = 4000
    for _ in range(5):
        sigma = rng.integers(0, 2, n_bits).astype(np.uint8)
        sigma[0] = 1
        hits = sum(is_codeword(amd_encode(m, eta, rng).to_bits() ^ sigma, eta) for _ in range(n))
        assert hits / n <= three_sigma(float(eta), n)


def test_lengths_monotone_in_eta():
    prev_a = prev_f = 0
    for e in (Fraction(1, 2), Fraction(1, 8), Fraction(1, 100), Fraction(1, 10**6)):
        a, f = amd_length(100, e) - 100, fingerprint_width(100, e)
        assert a >= prev_a and f >= prev_f
        prev_a, prev_f = a, f


@given(st.lists(st.integers(0, 1), min_size=1, max_size=200), st.integers(1, 2**20))
def test_roundtrip_property(bits, denom):
    eta = Fraction(1, denom + 1)
    rng = np.random.default_rng(denom)
    m = np.array(bits, np.uint8)
    c = amd_encode(m, eta, rng).to_bits()
    assert np.array_equal(amd_decode(c, eta), m)
