"""The binary block code, the AMD code and hash fingerprints."""

from fractions import Fraction

import numpy as np

from unknown_noise.blockcode import ec_decode, ec_encode
from unknown_noise.integrity import (
    FingerprintSeed, amd_decode, amd_encode, fingerprint, is_codeword,
)

rng = np.random.default_rng(1)
m = rng.integers(0, 2, 100).astype(np.uint8)

# block code: anything below n/8 flips decodes back
c = ec_encode(m)
e = np.zeros(c.size, np.uint8)
e[rng.choice(c.size, c.size // 8 - 1, replace=False)] = 1
print(f"{m.size} bits -> {c.size} bits, {e.sum()} flips,",
      "decoded ok:", np.array_equal(ec_decode(c ^ e, length=m.size), m))

# AMD code: a fixed XOR offset is caught except with probability about eta
eta = Fraction(1, 256)
cw = amd_encode(m, eta, rng).to_bits()
print("AMD length", cw.size, " roundtrip:", np.array_equal(amd_decode(cw, eta), m))
sigma = rng.integers(0, 2, cw.size).astype(np.uint8)
caught = sum(not is_codeword(amd_encode(m, eta, rng).to_bits() ^ sigma, eta) for _ in range(2000))
print(f"tampered codewords rejected: {caught}/2000")

# fingerprints: one seed, two messages differing in one bit
p = Fraction(1, 1024)
seed = FingerprintSeed.sample(rng, 100, p)
m2 = m.copy()
m2[17] ^= 1
print("fingerprints differ:", fingerprint(seed, m, p, 100) != fingerprint(seed, m2, p, 100))
