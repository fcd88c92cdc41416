import itertools
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from unknown_noise.field import (
    GF, MODULI, FieldElement, FieldMismatchError, field_add, field_inv, field_mul, gf,
    is_irreducible,
)


def naive_mul(a, b, k, modulus):
    """Shift-and-reduce oracle, written independently of the package."""
    r = 0
    for i in range(k):
        if (b >> i) & 1:
            r ^= a << i
    for i in range(2 * k - 2, k - 1, -1):
        if (r >> i) & 1:
            r ^= modulus << (i - k)
    return r


def naive_irreducible(poly):
    """Trial division by every polynomial of lower positive degree."""
    deg = poly.bit_length() - 1
    for d in range(1, deg // 2 + 1):
        for q in range(1 << d, 1 << (d + 1)):
            r = poly
            while r.bit_length() - 1 >= d:
                r ^= q << (r.bit_length() - 1 - d)
            if r == 0:
                return False
    return True


# frozen examples in GF(8) with modulus x^3 + x + 1

def test_gf8_add_example():
    assert gf(3).modulus == 0b1011
    F = gf(3)
    assert field_add(F(0b011), F(0b101)) == F(0b110)


def test_gf8_mul_example():
    F = gf(3)
    assert field_mul(F(0b010), F(0b100)) == F(0b011)


def test_gf8_inverse_example():
    F = gf(3)
    (b,) = [b for b in range(8) if F.mul(0b010, b) == 1]
    assert field_inv(F(0b010)).value == b == 0b101


def test_identities():
    F = gf(8)
    for a in (0, 1, 7, 200, 255):
        assert F.add(a, 0) == a
        assert F.add(a, a) == 0
        assert F.mul(a, 1) == a
        assert F.mul(a, 0) == 0
    assert F.inv(1) == 1


def test_zero_has_no_inverse():
    with pytest.raises(ZeroDivisionError):
        gf(4).inv(0)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_axioms_exhaustive(k):
    F = gf(k)
    els = range(F.order)
    for a in els:
        assert F.mul(a, F.inv(a)) == 1 if a else True
        for b in els:
            s, p = F.add(a, b), F.mul(a, b)
            assert 0 <= s < F.order and 0 <= p < F.order
            assert p == F.mul(b, a) and s == F.add(b, a)
            for c in els:
                assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))
                assert F.add(F.add(a, b), c) == F.add(a, F.add(b, c))
                assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))


def test_gf16_inverse_exhaustive():
    F = gf(4)
    assert all(F.mul(a, F.inv(a)) == 1 for a in range(1, 16))


@pytest.mark.parametrize("k", [8, 10, 16])
def test_mul_matches_oracle(k):
    F = gf(k)
    rnd = random.Random(k)
    for _ in range(10_000):
        a, b = rnd.randrange(F.order), rnd.randrange(F.order)
        assert F.mul(a, b) == naive_mul(a, b, k, MODULI[k])


@pytest.mark.parametrize("k", [17, 31, 33, 48, 64])
def test_wide_fields_match_oracle(k):
    F = gf(k)
    rnd = random.Random(k)
    for _ in range(500):
        a, b = rnd.getrandbits(k), rnd.getrandbits(k)
        assert F.mul(a, b) == naive_mul(a, b, k, MODULI[k])
        assert F.multiplier(b)(a) == F.mul(a, b)
        if a:
            assert F.mul(a, F.inv(a)) == 1


def test_vector_ops_match_scalar():
    for k in (5, 12, 20):
        F = gf(k)
        rnd = np.random.default_rng(k)
        a = rnd.integers(0, F.order, 200)
        b = rnd.integers(1, F.order, 200)
        assert F.vmul(a, b).tolist() == [F.mul(int(x), int(y)) for x, y in zip(a, b)]
        assert F.vinv(b).tolist() == [F.inv(int(y)) for y in b]


def test_moduli_are_least_irreducible():
    for k in range(1, 13):
        least = next(p for p in range(1 << k, 1 << (k + 1)) if naive_irreducible(p))
        assert MODULI[k] == least
    for k, m in MODULI.items():
        assert m.bit_length() - 1 == k
        assert is_irreducible(m)


def test_custom_modulus_validated():
    assert GF(4, 0b11001).mul(2, 8) == naive_mul(2, 8, 4, 0b11001)
    with pytest.raises(ValueError):
        GF(4, 0b10101)  # (x^2 + x + 1)^2


@given(st.integers(0, 2**16 - 1), st.integers(0, 2**16 - 1))
def test_frobenius(a, b):
    F = gf(16)
    assert F.pow(F.add(a, b), 2) == F.add(F.pow(a, 2), F.pow(b, 2))


@given(st.integers(0, 2**40 - 1))
def test_frobenius_order(a):
    F = gf(40)
    x = a
    for _ in range(40):
        x = F.mul(x, x)
    assert x == a


@given(st.integers(1, 255), st.integers(1, 255))
def test_division_inverts_multiplication(a, b):
    F = gf(8)
    assert F.div(F.mul(a, b), b) == a


def test_field_element_operators():
    F = gf(3)
    a, b = F(0b010), F(0b100)
    assert (a * b).value == 0b011
    assert (a + b).value == 0b110
    assert (a - b) == (a + b)
    assert (a / a).value == 1
    assert (a ** 7).value == 1
    assert a.inverse().value == 0b101
    with pytest.raises(FieldMismatchError):
        _ = a + gf(4)(1)
    with pytest.raises(ValueError):
        FieldElement(8, F)


def test_field_cache_is_shared():
    assert gf(12) is gf(12)
    assert list(itertools.islice((gf(k).order for k in range(1, 4)), 3)) == [2, 4, 8]
