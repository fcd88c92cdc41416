"""Binary block code that corrects any fraction ``rho < 1/8`` of flipped bits.

Concatenated construction:

* outer code: Reed-Solomon over GF(256) (``reedsolo``), systematic, length
  ``n`` chosen per message so that the radius guarantee holds;
* inner code: systematic [16, 8, 5] binary code (shortened quadratic-residue
  code), one inner word per outer byte. Low byte carries the message, high
  byte the parity.

Decoding is Forney-style generalised minimum distance: each inner word is
decoded by syndrome lookup, giving a byte and the weight ``w`` of the applied
correction. The outer decoder is tried three times, erasing the words with
``w >= 3``, ``w >= 2`` and ``w >= 1``. Any candidate whose re-encoding lies
within ``5 (n - k + 1) / 2`` bits of the received word is the unique closest
codeword. Whenever fewer than that many bits are flipped, one of the three
trials finds it. The outer length is the least ``n`` with
``2 (ceil(rho * 16 n) - 1) < 5 (n - k + 1)``.

Every step depends on the received word only through its syndromes, so
``ec_decode(ec_encode(m) ^ e) ^ m`` is a function of ``e`` alone.

Messages longer than one outer block (roughly 52 bytes at ``rho = 1/8``) are
split into near-equal blocks and the radius guarantee then holds per block.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import ceil

import numpy as np
import reedsolo

from .bits import as_bits

INNER_N, INNER_K, INNER_D = 16, 8, 5
# parity contribution of each message bit (generator 0x139, shortened [17, 9, 5] QR code)
INNER_PARITY_ROWS = (0x39, 0x72, 0xE4, 0xF1, 0xDB, 0x8F, 0x27, 0x4E)
OUTER_MAX_N = 255


class FramingError(ValueError):
    """A received string has no valid codeword length."""


@dataclass(frozen=True)
class CodeParams:
    """Correction radius of the block code.

    Parameters
    ----------
    rho : Fraction
        Any pattern of fewer than ``rho * n`` flips in an ``n``-bit block is
        corrected. Must lie in ``(0, 1/8]``.
    """

    rho: Fraction = Fraction(1, 8)

    def __post_init__(self):
        rho = Fraction(self.rho)
        if not 0 < rho <= Fraction(1, 8):
            raise ValueError(f"correction radius must lie in (0, 1/8], got {rho}")
        object.__setattr__(self, "rho", rho)

    @property
    def expansion(self) -> Fraction:
        """Supremum of ``|ec_encode(m)| / |m|`` over single-block messages."""
        return _expansion(self.rho)


DEFAULT_PARAMS = CodeParams()


def _build_inner():
    parity = np.zeros(256, dtype=np.int64)
    for m in range(256):
        p = 0
        for i in range(8):
            if (m >> i) & 1:
                p ^= INNER_PARITY_ROWS[i]
        parity[m] = p
    # coset leaders by (weight, value): minimum weight, lexicographic tie-break
    leader = np.full(256, -1, dtype=np.int64)
    weight = np.zeros(256, dtype=np.int64)
    patterns = sorted(range(1 << 16), key=lambda e: (bin(e).count("1"), e))
    for e in patterns:
        s = int(parity[e & 0xFF]) ^ (e >> 8)
        if leader[s] < 0:
            leader[s] = e
            weight[s] = bin(e).count("1")
    return parity, leader, weight


_PARITY, _LEADER, _LEADER_WEIGHT = _build_inner()


def inner_encode(msg_bytes) -> np.ndarray:
    """Inner codewords (as ints) for an array of bytes."""
    m = np.asarray(msg_bytes, dtype=np.int64)
    return m | (_PARITY[m] << 8)


def inner_decode(words):
    """Syndrome-decode inner words; returns (bytes, correction weights)."""
    words = np.asarray(words, dtype=np.int64)
    syn = _PARITY[words & 0xFF] ^ (words >> 8)
    fixed = words ^ _LEADER[syn]
    return fixed & 0xFF, _LEADER_WEIGHT[syn]


def _outer_ok(n: int, k: int, rho: Fraction) -> bool:
    max_flips = ceil(rho * INNER_N * n) - 1
    return 2 * max_flips < INNER_D * (n - k + 1)


@lru_cache(maxsize=None)
def outer_length(k: int, rho: Fraction = DEFAULT_PARAMS.rho) -> int:
    """Least outer length meeting the radius guarantee for ``k`` message bytes."""
    n = k
    while not _outer_ok(n, k, rho):
        n += 1
    return n


@lru_cache(maxsize=None)
def _max_block_bytes(rho: Fraction) -> int:
    k = 1
    while outer_length(k + 1, rho) <= OUTER_MAX_N:
        k += 1
    return k


@lru_cache(maxsize=None)
def _expansion(rho: Fraction) -> Fraction:
    kmax = _max_block_bytes(rho)
    return max(Fraction(INNER_N * outer_length(k, rho), 8 * k) for k in range(1, kmax + 1))


def _blocks(k: int, rho: Fraction) -> list[int]:
    kmax = _max_block_bytes(rho)
    t = -(-k // kmax)
    base, extra = divmod(k, t)
    return [base + 1] * extra + [base] * (t - extra)


@lru_cache(maxsize=None)
def _codec(n: int, k: int) -> reedsolo.RSCodec:
    return reedsolo.RSCodec(n - k, nsize=n)


def encoded_length(n_bits: int, params: CodeParams = DEFAULT_PARAMS) -> int:
    """Length of ``ec_encode`` output for an ``n_bits`` message."""
    k = max(-(-n_bits // 8), 1)
    return INNER_N * sum(outer_length(b, params.rho) for b in _blocks(k, params.rho))


def _words_to_bits(words) -> np.ndarray:
    shifts = np.arange(INNER_N, dtype=np.int64)
    return ((np.asarray(words, dtype=np.int64)[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def _bits_to_words(bits) -> np.ndarray:
    w = np.left_shift(np.int64(1), np.arange(INNER_N, dtype=np.int64))
    return bits.reshape(-1, INNER_N).astype(np.int64) @ w


def _bytes_to_bits(b) -> np.ndarray:
    b = np.frombuffer(bytes(b), dtype=np.uint8)
    return np.unpackbits(b, bitorder="little")


def ec_encode(m, params: CodeParams = DEFAULT_PARAMS) -> np.ndarray:
    """Encode a bit string; the output length depends only on ``len(m)``."""
    m = as_bits(m)
    if m.size == 0:
        raise ValueError("cannot encode an empty message")
    data = np.packbits(m, bitorder="little").tobytes()
    out, pos = [], 0
    for kb in _blocks(len(data), params.rho):
        n = outer_length(kb, params.rho)
        chunk = data[pos:pos + kb]
        cw = np.frombuffer(bytes(_codec(n, kb).encode(chunk) if n > kb else chunk), dtype=np.uint8)
        out.append(_words_to_bits(inner_encode(cw)))
        pos += kb
    return np.concatenate(out)


def _decode_block(words: np.ndarray, k: int) -> bytes:
    n = len(words)
    bytes_, weight = inner_decode(words)
    received = bytes(bytes_.astype(np.uint8))
    if n == k:
        return received
    codec = _codec(n, k)
    if not weight.any() and bytes(codec.encode(received[:k])) == received:
        return received[:k]
    limit = INNER_D * (n - k + 1)
    best, best_dist = None, None
    for threshold in (3, 2, 1):
        erase = np.flatnonzero(weight >= threshold).tolist()
        if len(erase) > n - k:
            continue
        try:
            msg = bytes(codec.decode(received, erase_pos=erase or None)[0])
        except reedsolo.ReedSolomonError:
            continue
        dist = int(np.count_nonzero(_words_to_bits(inner_encode(
            np.frombuffer(bytes(codec.encode(msg)), dtype=np.uint8))) != _words_to_bits(words)))
        if 2 * dist < limit:
            return msg
        if best_dist is None or dist < best_dist:
            best, best_dist = msg, dist
    if best is not None:
        return best
    return received[:k]


def ec_decode(c, params: CodeParams = DEFAULT_PARAMS, length: int | None = None) -> np.ndarray:
    """Decode a received string.

    Parameters
    ----------
    c : bit array
        Received bits; the length must be that of some codeword.
    params : CodeParams
    length : int, optional
        Message length in bits, known to the caller. Without it the output
        is the whole decoded byte string.

    Returns
    -------
    numpy.ndarray
        The message when fewer than ``rho * len(c)`` bits (per block) were
        flipped, otherwise the best candidate found.

    Raises
    ------
    FramingError
        If ``len(c)`` matches no message length.
    """
    c = as_bits(c)
    if length is not None:
        k = max(-(-length // 8), 1)
        if encoded_length(length, params) != c.size:
            raise FramingError(f"{c.size} bits is not the encoding length of a {length}-bit message")
    else:
        k = _infer_bytes(c.size, params.rho)
    words = _bits_to_words(c)
    out, pos = [], 0
    for kb in _blocks(k, params.rho):
        n = outer_length(kb, params.rho)
        out.append(_decode_block(words[pos:pos + n], kb))
        pos += n
    bits = _bytes_to_bits(b"".join(out))
    return bits if length is None else bits[:length].copy()


def _infer_bytes(n_bits: int, rho: Fraction) -> int:
    if n_bits % INNER_N:
        raise FramingError(f"{n_bits} is not a multiple of {INNER_N}")
    for k in range(1, n_bits // INNER_N + 1):
        if encoded_length(8 * k, CodeParams(rho)) == n_bits:
            return k
    raise FramingError(f"{n_bits} bits is not a codeword length")
