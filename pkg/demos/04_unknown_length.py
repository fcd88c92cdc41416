"""Sending a message whose length Bob does not know in advance."""

import numpy as np

from unknown_noise.adversaries import make_adversary
from unknown_noise.protocol import length_header, run_unknown_l

M = np.random.default_rng(4).integers(0, 2, 777).astype(np.uint8)
print("header for 777:", "".join(map(str, length_header(777)))[-16:], "(last 16 of 64 bits)")
for spec in ("null", "budgeted_random:80", "plaintext_corruptor:k=6"):
    rep = run_unknown_l(M, "0.01", make_adversary(spec), seed=4)
    print(f"{spec:24s} ok={rep.success} learned L={rep.learned_L} sent={rep.total_sent} T={rep.T}")
