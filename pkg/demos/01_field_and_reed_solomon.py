"""Finite field arithmetic and polynomial recovery from corrupted evaluations."""

import numpy as np

from unknown_noise.field import gf
from unknown_noise.rscode import evaluate_many, get_polynomial, pack_message, unpack_message

F = gf(10)  # GF(2^10), least irreducible modulus
print(F)
a, b = 0b1011001110, 0b0101
print("a*b =", F.mul(a, b), " a/a =", F.mul(a, F.inv(a)))

# pack 60 message bits into a degree-5 polynomial (six 10-bit coefficients)
rng = np.random.default_rng(0)
M = rng.integers(0, 2, 60).astype(np.uint8)
P = pack_message(M, 5, F)
print("coefficients:", P.coeffs)

# 16 evaluations, 4 of them overwritten with garbage
xs = list(range(16))
ys = [int(y) for y in evaluate_many(P, xs)]
for i in rng.choice(16, 4, replace=False):
    ys[i] ^= int(rng.integers(1, F.order))

Q = get_polynomial(list(zip(xs, ys)), 5, F)
print("recovered:", Q == P, " message intact:", np.array_equal(unpack_message(Q, 60), M))
