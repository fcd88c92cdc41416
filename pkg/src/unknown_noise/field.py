"""Arithmetic in GF(2^k), 1 <= k <= 64.

Elements use the polynomial basis: bit ``i`` of the integer representation is
the coefficient of ``x**i``. Each degree has one fixed modulus, the
lexicographically least irreducible polynomial of that degree, so that every
party (and every run) builds the same field.

Two interfaces are offered. :class:`GF` works on plain ints and numpy arrays
and is what the coding modules use internally. :class:`FieldElement` wraps an
int together with its field and supports the usual operators; mixing elements
of different fields raises :class:`FieldMismatchError`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Lexicographically least irreducible polynomial of each degree.
MODULI = {
    1: 0x2, 2: 0x7, 3: 0xB, 4: 0x13, 5: 0x25, 6: 0x43, 7: 0x83, 8: 0x11B,
    9: 0x203, 10: 0x409, 11: 0x805, 12: 0x1009, 13: 0x201B, 14: 0x4021,
    15: 0x8003, 16: 0x1002B, 17: 0x20009, 18: 0x40009, 19: 0x80027,
    20: 0x100009, 21: 0x200005, 22: 0x400003, 23: 0x800021, 24: 0x100001B,
    25: 0x2000009, 26: 0x400001B, 27: 0x8000027, 28: 0x10000003,
    29: 0x20000005, 30: 0x40000003, 31: 0x80000009, 32: 0x10000008D,
    33: 0x20000004B, 34: 0x40000001B, 35: 0x800000005, 36: 0x1000000035,
    37: 0x200000003F, 38: 0x4000000063, 39: 0x8000000011, 40: 0x10000000039,
    41: 0x20000000009, 42: 0x40000000027, 43: 0x80000000059,
    44: 0x100000000021, 45: 0x20000000001B, 46: 0x400000000003,
    47: 0x800000000021, 48: 0x100000000002D, 49: 0x2000000000071,
    50: 0x400000000001D, 51: 0x800000000004B, 52: 0x10000000000009,
    53: 0x20000000000047, 54: 0x4000000000007D, 55: 0x80000000000047,
    56: 0x100000000000095, 57: 0x200000000000011, 58: 0x400000000000063,
    59: 0x80000000000007B, 60: 0x1000000000000003, 61: 0x2000000000000027,
    62: 0x4000000000000069, 63: 0x8000000000000003, 64: 0x1000000000000001B,
}

# Fields up to this size get log/antilog tables and vectorised numpy kernels.
TABLE_MAX_K = 16


class FieldMismatchError(ValueError):
    """Operands belong to different fields."""


def clmul(a: int, b: int) -> int:
    """Carry-less product of two GF(2)[x] polynomials."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def poly_mod(a: int, m: int) -> int:
    """Remainder of ``a`` modulo ``m`` in GF(2)[x]."""
    dm = m.bit_length() - 1
    while a and a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


def _poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, poly_mod(a, b)
    return a


def _prime_factors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def is_irreducible(f: int) -> bool:
    """Rabin's irreducibility test for ``f`` in GF(2)[x]."""
    k = f.bit_length() - 1
    if k < 1:
        return False
    if k == 1:
        return True

    def x_to_2_to(e: int) -> int:
        r = 0b10
        for _ in range(e):
            r = poly_mod(clmul(r, r), f)
        return r

    if x_to_2_to(k) != 0b10:
        return False
    return all(_poly_gcd(f, x_to_2_to(k // p) ^ 0b10) == 1 for p in _prime_factors(k))


class GF:
    """The field GF(2^k) reduced by ``modulus``.

    Parameters
    ----------
    k : int
        Extension degree, ``1 <= k <= 64``.
    modulus : int, optional
        Irreducible polynomial of degree ``k`` as a bit mask. Defaults to the
        table entry in :data:`MODULI`.
    """

    def __init__(self, k: int, modulus: int | None = None):
        if not 1 <= k <= 64:
            raise ValueError(f"extension degree must be in 1..64, got {k}")
        if modulus is None:
            modulus = MODULI[k]
        elif modulus.bit_length() - 1 != k or not is_irreducible(modulus):
            raise ValueError(f"{modulus:#x} is not an irreducible polynomial of degree {k}")
        self.k = k
        self.modulus = modulus
        self.order = 1 << k
        self._tables = k <= TABLE_MAX_K
        low = modulus ^ (1 << k)
        self._low_bits = tuple(i for i in range(k) if (low >> i) & 1)
        if self._tables:
            self._build_tables()

    def __repr__(self):
        return f"GF(2^{self.k}, modulus={self.modulus:#x})"

    def __eq__(self, other):
        return isinstance(other, GF) and (self.k, self.modulus) == (other.k, other.modulus)

    def __hash__(self):
        return hash((self.k, self.modulus))

    def __call__(self, value: int) -> FieldElement:
        return FieldElement(int(value), self)

    def _reduce(self, r: int) -> int:
        k, mask = self.k, self.order - 1
        low_bits = self._low_bits
        hi = r >> k
        while hi:
            r &= mask
            for i in low_bits:
                r ^= hi << i
            hi = r >> k
        return r

    def _slow_mul(self, a: int, b: int) -> int:
        if a.bit_length() < b.bit_length():
            a, b = b, a
        r = 0
        while b:
            if b & 1:
                r ^= a
            b >>= 1
            a <<= 1
        return self._reduce(r)

    def multiplier(self, c: int):
        """Function ``a -> a * c`` tuned for many products by the same ``c``."""
        self.check(c)
        if self._tables:
            if c == 0:
                return lambda a: 0
            lc, exp, log = self._log_l[c], self._exp_l, self._log_l
            return lambda a: exp[log[a] + lc] if a else 0
        # byte-window table of carry-less multiples of c
        tbl = [0] * 256
        for i in range(1, 256):
            tbl[i] = tbl[i >> 1] << 1 if i % 2 == 0 else tbl[i - 1] ^ c
        nbytes = (self.k + 7) // 8
        reduce = self._reduce

        def mul(a):
            r = 0
            for s in range(8 * (nbytes - 1), -1, -8):
                r = (r << 8) ^ tbl[(a >> s) & 0xFF]
            return reduce(r)
        return mul

    def _build_tables(self):
        n = self.order - 1
        gen = 1 if n == 1 else self._find_generator()
        exp = np.zeros(2 * n, dtype=np.int64)
        log = np.zeros(self.order, dtype=np.int64)
        x = 1
        for i in range(n):
            exp[i] = x
            log[x] = i
            x = self._slow_mul(x, gen)
        exp[n:] = exp[:n]
        self.generator = gen
        self._exp = exp
        self._log = log
        self._exp_l = exp.tolist()
        self._log_l = log.tolist()

    def _find_generator(self) -> int:
        n = self.order - 1
        factors = _prime_factors(n)
        for g in range(2, self.order):
            if all(self._slow_pow(g, n // p) != 1 for p in factors):
                return g
        raise AssertionError("multiplicative group has no generator")  # unreachable

    def _slow_pow(self, a: int, e: int) -> int:
        r = 1
        while e:
            if e & 1:
                r = self._slow_mul(r, a)
            a = self._slow_mul(a, a)
            e >>= 1
        return r

    def check(self, a: int) -> int:
        if not 0 <= a < self.order:
            raise ValueError(f"{a} is not an element of {self}")
        return a

    # scalar kernels on ints

    @staticmethod
    def add(a: int, b: int) -> int:
        return a ^ b

    def mul(self, a: int, b: int) -> int:
        if self._tables:
            if a == 0 or b == 0:
                return 0
            return self._exp_l[self._log_l[a] + self._log_l[b]]
        return self._slow_mul(a, b)

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        if self._tables:
            return self._exp_l[(self.order - 1 - self._log_l[a]) % (self.order - 1)] if self.order > 2 else 1
        # extended Euclid in GF(2)[x]
        r0, r1, s0, s1 = self.modulus, a, 0, 1
        while r1:
            shift = r0.bit_length() - r1.bit_length()
            if shift < 0:
                r0, r1, s0, s1 = r1, r0, s1, s0
                continue
            r0 ^= r1 << shift
            s0 ^= s1 << shift
        return poly_mod(s0, self.modulus) if r0 == 1 else self._slow_pow(a, self.order - 2)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            a, e = self.inv(a), -e
        if self._tables:
            if a == 0:
                return 0 if e else 1
            return self._exp_l[(self._log_l[a] * e) % (self.order - 1)] if self.order > 2 else 1
        return self._slow_pow(a, e)

    # vector kernels on numpy int64 arrays (object arrays for k > 16)

    def vmul(self, a, b):
        """Element-wise product of two arrays (or an array and a scalar)."""
        if self._tables:
            a = np.asarray(a, dtype=np.int64)
            b = np.asarray(b, dtype=np.int64)
            out = self._exp[self._log[a] + self._log[b]]
            return np.where((a == 0) | (b == 0), 0, out)
        a, b = np.broadcast_arrays(np.asarray(a, dtype=object), np.asarray(b, dtype=object))
        return np.array([self._slow_mul(int(x), int(y)) for x, y in zip(a.ravel(), b.ravel())],
                        dtype=object).reshape(a.shape)

    def vinv(self, a):
        if self._tables:
            a = np.asarray(a, dtype=np.int64)
            if np.any(a == 0):
                raise ZeroDivisionError("zero has no multiplicative inverse")
            if self.order == 2:
                return np.ones_like(a)
            return self._exp[(self.order - 1 - self._log[a]) % (self.order - 1)]
        return np.array([self.inv(int(x)) for x in np.ravel(a)], dtype=object).reshape(np.shape(a))

    def zeros(self, n: int):
        return np.zeros(n, dtype=np.int64 if self._tables else object)

    def array(self, values):
        return np.asarray(values, dtype=np.int64 if self._tables else object)


@lru_cache(maxsize=None)
def gf(k: int) -> GF:
    """Shared instance of GF(2^k) with the default modulus."""
    return GF(k)


@dataclass(frozen=True)
class FieldElement:
    """An element of a specific GF(2^k)."""

    value: int
    field: GF

    def __post_init__(self):
        self.field.check(self.value)

    def _other(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise FieldMismatchError(f"{self.field} vs {other.field}")
            return other.value
        if isinstance(other, (int, np.integer)):
            return self.field.check(int(other))
        return NotImplemented

    def __add__(self, other):
        v = self._other(other)
        return NotImplemented if v is NotImplemented else FieldElement(self.value ^ v, self.field)

    __radd__ = __add__
    __sub__ = __add__
    __rsub__ = __add__

    def __mul__(self, other):
        v = self._other(other)
        return NotImplemented if v is NotImplemented else FieldElement(self.field.mul(self.value, v), self.field)

    __rmul__ = __mul__

    def __truediv__(self, other):
        v = self._other(other)
        return NotImplemented if v is NotImplemented else FieldElement(self.field.div(self.value, v), self.field)

    def __pow__(self, e: int):
        return FieldElement(self.field.pow(self.value, e), self.field)

    def __neg__(self):
        return self

    def inverse(self) -> FieldElement:
        return FieldElement(self.field.inv(self.value), self.field)

    def __int__(self):
        return self.value

    def __bool__(self):
        return self.value != 0

    def __repr__(self):
        return f"{self.value:#0{self.field.k + 2}b}@GF(2^{self.field.k})"


def field_add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a + b


def field_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    return a * b


def field_inv(a: FieldElement) -> FieldElement:
    return a.inverse()
