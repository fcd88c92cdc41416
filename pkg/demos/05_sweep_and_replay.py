"""A small sweep: CSV output, cost-bound audit and transcript replay."""

import tempfile
from pathlib import Path

from unknown_noise.harness import (
    ExperimentConfig, check_cost_bounds, read_csv, replay_transcript, run_sweep, validate_silence_bound,
)

out = Path(tempfile.mkdtemp()) / "sweep.csv"
cfg = ExperimentConfig(Ls=(64, 256), deltas=("0.1",),
                       adversaries=("null", "budgeted_random:50", "fingerprint_jammer"),
                       trials=20, out=str(out))
res = run_sweep(cfg, archive={7: str(out.with_name("row7.csv"))})
for c in res.cells():
    print(f"{c['adversary']:20s} L={c['L']:4d} failures={c['failures']} "
          f"mean sent={c['meanSent']:.0f} mean T={c['meanT']:.1f}")

rows = read_csv(out)
audit = check_cost_bounds(rows)
print(f"bound audit: {len(audit['g_violations'])} g, {len(audit['headline_violations'])} headline")
print("replay of row 7 matches:", replay_transcript(rows[7]) == out.with_name("row7.csv").read_text())

for r in validate_silence_bound((71, 100), samples=100_000):
    print(f"silence check b={r['b']}: {r['observed']:.2e} <= {r['bound']:.2e}")
