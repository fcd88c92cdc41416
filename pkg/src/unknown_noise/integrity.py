"""Fingerprints and algebraic manipulation detection (AMD) codes.

Fingerprint
    Polynomial-evaluation hash over GF(2^w) with ``w = ceil(log2(l/p)) + 1``.
    The message ``m`` is extended to ``m || 1`` (so distinct lengths never
    collide) and cut into w-bit chunks ``c_0..c_{n-1}``. The seed is one
    element ``r`` and the digest is ``sum c_i r**(i+1)``. Two distinct messages
    collide only when ``r`` is a root of a nonzero polynomial of degree at most
    ``n``, so the collision probability is at most ``n / 2**w <= p``.

AMD code
    ``f(x, m) = x**(D+2) + sum_{i=1..D} m_i x**i`` over GF(2^w), with ``m`` cut
    into ``D`` chunks, ``D`` odd, and ``x`` uniform. Any fixed XOR offset
    survives with probability at most ``(D+1) / 2**w <= eta``. The wire format
    is ``payload || x || f`` with each tag ``w`` bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .bits import as_bits, ceil_log2, chunk_ints, int_to_bits, bits_to_int
from .field import gf

MAX_WIDTH = 64


class WidthError(ValueError):
    """A requested strength needs a field wider than 64 bits."""


class AmdDecodeError(ValueError):
    """``amd_decode`` was called on a string that is not a codeword."""


def _prob(p) -> Fraction:
    p = Fraction(p)
    if not 0 < p < 1:
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    return p


def random_element(rng: np.random.Generator, w: int) -> int:
    """Uniform integer in ``[0, 2**w)`` drawn from ``rng``."""
    raw = int.from_bytes(rng.bytes((w + 7) // 8), "little")
    return raw & ((1 << w) - 1)


# fingerprints

@lru_cache(maxsize=4096)
def _fp_width(ell: int, p: Fraction) -> int:
    w = ceil_log2(Fraction(max(ell, 1)) / p) + 1
    if w > MAX_WIDTH:
        raise WidthError(f"fingerprint width {w} exceeds {MAX_WIDTH}")
    return max(w, 1)


def fingerprint_width(ell: int, p) -> int:
    """Seed and digest length in bits for messages up to ``ell`` bits."""
    return _fp_width(int(ell), _prob(p))


@dataclass(frozen=True)
class FingerprintSeed:
    r: int
    width: int

    @classmethod
    def sample(cls, rng: np.random.Generator, ell: int, p) -> FingerprintSeed:
        w = fingerprint_width(ell, p)
        return cls(random_element(rng, w), w)

    def to_bits(self) -> np.ndarray:
        return int_to_bits(self.r, self.width)


@dataclass(frozen=True)
class Fingerprint:
    seed: FingerprintSeed
    digest: int

    @property
    def width(self) -> int:
        return self.seed.width

    def to_bits(self) -> np.ndarray:
        return np.concatenate([self.seed.to_bits(), int_to_bits(self.digest, self.width)])

    @classmethod
    def from_bits(cls, bits) -> Fingerprint:
        bits = as_bits(bits)
        if bits.size % 2:
            raise ValueError("fingerprint serialization has odd length")
        w = bits.size // 2
        return cls(FingerprintSeed(bits_to_int(bits[:w]), w), bits_to_int(bits[w:]))


def hash_digest(r: int, m, w: int) -> int:
    """Digest of ``m`` under seed element ``r`` in GF(2^w)."""
    F = gf(w)
    m = as_bits(m)
    ext = np.concatenate([m, np.ones(1, dtype=np.uint8)])
    mul_r = F.multiplier(r)
    acc = 0
    for c in reversed(chunk_ints(ext, w)):
        acc = mul_r(acc ^ c)
    return acc


def fingerprint(seed: FingerprintSeed, m, p, ell: int) -> Fingerprint:
    """Fingerprint of ``m`` (at most ``ell`` bits) with collision probability at most ``p``.

    Raises
    ------
    ValueError
        If ``m`` is longer than ``ell`` or the seed has the wrong width.
    """
    m = as_bits(m)
    if m.size > ell:
        raise ValueError(f"message of {m.size} bits exceeds the declared bound {ell}")
    w = fingerprint_width(ell, p)
    if seed.width != w:
        raise ValueError(f"seed has {seed.width} bits, expected {w}")
    return Fingerprint(seed, hash_digest(seed.r, m, w))


# AMD codes

def _amd_chunks(n_bits: int, w: int) -> int:
    D = max(-(-n_bits // w), 1)
    return D if D % 2 else D + 1


@lru_cache(maxsize=4096)
def _amd_width(n_bits: int, eta: Fraction) -> int:
    for w in range(1, MAX_WIDTH + 1):
        if (_amd_chunks(n_bits, w) + 1) <= eta * (1 << w):
            return w
    raise WidthError(f"no AMD width up to {MAX_WIDTH} reaches strength {eta}")


def amd_width(n_bits: int, eta) -> int:
    """Tag width for a payload of ``n_bits`` at strength ``eta``."""
    return _amd_width(int(n_bits), _prob(eta))


def amd_length(n_bits: int, eta) -> int:
    return n_bits + 2 * amd_width(n_bits, eta)


def _amd_tag(m, x: int, w: int) -> int:
    F = gf(w)
    D = _amd_chunks(len(m), w)
    chunks = chunk_ints(m, w)
    chunks += [0] * (D - len(chunks))
    # Horner from x**(D+2) down; the x**(D+1) and x**0 coefficients are zero
    mul_x = F.multiplier(x)
    acc = x
    for c in reversed(chunks):
        acc = mul_x(acc) ^ c
    return mul_x(acc)


@dataclass(frozen=True)
class AmdCodeword:
    payload: np.ndarray
    tag_x: int
    tag_f: int
    width: int

    def to_bits(self) -> np.ndarray:
        return np.concatenate([self.payload, int_to_bits(self.tag_x, self.width),
                               int_to_bits(self.tag_f, self.width)])

    def __len__(self):
        return self.payload.size + 2 * self.width


def amd_encode(m, eta, rng: np.random.Generator) -> AmdCodeword:
    """Encode ``m`` with a fresh uniform tag point drawn from ``rng``."""
    m = as_bits(m).copy()
    w = amd_width(m.size, eta)
    x = random_element(rng, w)
    return AmdCodeword(m, x, _amd_tag(m, x, w), w)


def amd_parse(c, eta) -> AmdCodeword | None:
    """Split a serialized codeword at the lengths implied by ``|c|`` and ``eta``."""
    c = as_bits(c)
    eta = _prob(eta)
    # |m| + 2 w(|m|) is strictly increasing in |m|, so at most one w fits
    for w in range(1, MAX_WIDTH + 1):
        n = c.size - 2 * w
        if n < 0:
            break
        try:
            if _amd_width(n, eta) == w:
                return AmdCodeword(c[:n].copy(), bits_to_int(c[n:n + w]), bits_to_int(c[n + w:]), w)
        except WidthError:
            return None
    return None


def is_codeword(c, eta) -> bool:
    """True iff ``c`` parses and its check tag matches."""
    cw = c if isinstance(c, AmdCodeword) else amd_parse(c, eta)
    if cw is None:
        return False
    return _amd_tag(cw.payload, cw.tag_x, cw.width) == cw.tag_f


def amd_decode(c, eta) -> np.ndarray:
    """Payload of a valid codeword.

    Raises
    ------
    AmdDecodeError
        If ``c`` is not a codeword.
    """
    cw = c if isinstance(c, AmdCodeword) else amd_parse(c, eta)
    if cw is None or not is_codeword(cw, eta):
        raise AmdDecodeError("not an AMD codeword")
    return cw.payload.copy()
