"""Bit-string helpers.

Bit strings are 1-D ``numpy.uint8`` arrays holding 0/1 values. Index 0 is
the first bit on the wire.
"""

from fractions import Fraction

import numpy as np


def as_bits(data) -> np.ndarray:
    """Coerce a sequence of 0/1 values (or a '0101' string) to a bit array."""
    if isinstance(data, str):
        arr = np.frombuffer(data.encode("ascii"), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(data, dtype=np.uint8).ravel()
    if arr.size and arr.max() > 1:
        raise ValueError("bit strings may only contain 0 and 1")
    return arr.astype(np.uint8, copy=False)


def to_str(bits) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits).ravel())


def int_to_bits(value: int, width: int) -> np.ndarray:
    """Little-endian bit decomposition of ``value`` into ``width`` bits."""
    if value < 0 or (width < value.bit_length()):
        raise ValueError(f"{value} does not fit in {width} bits")
    return np.array([(value >> i) & 1 for i in range(width)], dtype=np.uint8)


def bits_to_int(bits) -> int:
    """Inverse of :func:`int_to_bits`."""
    out = 0
    for i, b in enumerate(np.asarray(bits).ravel()):
        if b:
            out |= 1 << i
    return out


def chunk_ints(bits, width: int) -> list[int]:
    """Split ``bits`` into little-endian ``width``-bit chunks; last chunk zero-padded."""
    bits = np.asarray(bits, dtype=np.uint8)
    n = -(-bits.size // width)
    if n == 0:
        return []
    padded = np.zeros(n * width, dtype=np.uint8)
    padded[: bits.size] = bits
    if width <= 62:
        weights = np.left_shift(np.int64(1), np.arange(width, dtype=np.int64))
        return [int(v) for v in padded.reshape(n, width).astype(np.int64) @ weights]
    return [bits_to_int(row) for row in padded.reshape(n, width)]


def ints_to_bits(values, width: int) -> np.ndarray:
    """Concatenate little-endian ``width``-bit encodings of ``values``."""
    values = list(values)
    if not values:
        return np.zeros(0, dtype=np.uint8)
    if width <= 62:
        arr = np.asarray(values, dtype=np.int64)
        shifts = np.arange(width, dtype=np.int64)
        return ((arr[:, None] >> shifts) & 1).astype(np.uint8).ravel()
    return np.concatenate([int_to_bits(v, width) for v in values])


def bytes_from_bits(bits) -> bytes:
    """Pack bits (zero-padded to a byte boundary, LSB first within a byte)."""
    return bytes(chunk_ints(bits, 8))


def bits_from_bytes(data: bytes) -> np.ndarray:
    return ints_to_bits(list(data), 8)


def ceil_log2(x) -> int:
    """Smallest integer t with ``2**t >= x`` computed exactly (x > 0).

    Accepts ints, floats and Fractions; floats are converted exactly so two
    parties deriving the same quantity always agree.
    """
    x = Fraction(x)
    if x <= 0:
        raise ValueError("ceil_log2 needs a positive argument")
    if x <= 1:
        # 2**t >= x with t <= 0
        t = 0
        while Fraction(1, 2 ** (-(t - 1))) >= x:
            t -= 1
        return t
    num, den = x.numerator, x.denominator
    t = max(num.bit_length() - den.bit_length() - 1, 0)
    while (den << t) < num:
        t += 1
    while t > 0 and (den << (t - 1)) >= num:
        t -= 1
    return t
