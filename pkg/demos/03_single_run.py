"""One protocol run against each bundled adversary."""

import numpy as np

from unknown_noise.adversaries import BUNDLED, make_adversary
from unknown_noise.protocol import derive_params, round_params, run_known_l, zero_noise_cost

L, delta = 1000, "0.01"
p = derive_params(L, delta)
print(f"L={L} delta={delta}: q={p.q} d={p.d} C={p.C} b_1={round_params(1, p).b}")
print("noise-free cost:", zero_noise_cost(p))

M = np.random.default_rng(3).integers(0, 2, L).astype(np.uint8)
print(f"{'adversary':22s} {'ok':>3s} {'T':>6s} {'sent':>7s} {'rounds':>6s}")
for name in BUNDLED + ("omniscient_echo_forger",):
    rep = run_known_l(M, delta, make_adversary(name), seed=3)
    print(f"{name:22s} {int(rep.success):3d} {rep.T:6d} {rep.total_sent:7d} {rep.rounds:6d}"
          + ("" if rep.success else f"  ({rep.failure})"))

# the per-step transcript of a short run
rep, ch = run_known_l(M[:64], "0.1", make_adversary("echo_jammer:200"), seed=0,
                      record=True, return_channel=True)
print(ch.transcript_csv().splitlines()[:4])
print("per phase:", rep.per_phase_sent)
