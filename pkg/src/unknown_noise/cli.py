"""Command line: ``run``, ``sweep``, ``validate`` and ``replay``.

Every subcommand accepts ``--config FILE`` with ``key = value`` lines that
mirror the flags; flags given on the command line win over the file.
"""

from __future__ import annotations

import argparse
import json
import sys

from .adversaries import BUNDLED, ConfigError, REGISTRY
from .harness import (
    HEADLINE_CONSTANTS, ReplayError, alternation_census, check_cost_bounds, load_config,
    make_row, read_csv, replay_transcript, run_sweep, run_trial, validate_silence_bound,
)


def _int_list(text: str) -> tuple:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _str_list(text: str) -> tuple:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _common(p: argparse.ArgumentParser, multi: bool):
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--L", dest="Ls", type=_int_list if multi else int,
                   help="message length(s)" + (", comma separated" if multi else ""))
    p.add_argument("--delta", dest="deltas", type=_str_list if multi else str,
                   help="failure probability" + (" list, comma separated" if multi else ""))
    p.add_argument("--adversary", dest="adversaries", action="append" if multi else "store",
                   help="strategy as name[:params]" + ("; repeat for several" if multi else ""))
    p.add_argument("--seed", type=int)
    p.add_argument("--max-rounds", dest="max_rounds", type=int)
    p.add_argument("--mode", choices=("known", "unknown"))
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unknown-noise",
                                     description="Message transfer over an adversarial channel.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one trial and print its report")
    _common(p, multi=False)
    p.add_argument("--transcript", help="also write the per-step transcript CSV here")

    p = sub.add_parser("sweep", help="run a grid of trials and write the CSV")
    _common(p, multi=True)
    p.add_argument("--trials", type=int)
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("validate", help="Monte Carlo and bound checks")
    p.add_argument("--b", type=_int_list, default=(71, 100, 150))
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", help="sweep CSV to audit against the cost bounds")

    p = sub.add_parser("replay", help="regenerate the transcript of one sweep row")
    p.add_argument("--csv", required=True, help="sweep CSV")
    p.add_argument("--row", type=int, required=True, help="0-based data row index")
    p.add_argument("--out", help="transcript path (default: stdout)")

    sub.add_parser("adversaries", help="list the strategy library")
    return parser


def _config(args, multi: bool):
    over = {k: getattr(args, k, None) for k in ("Ls", "deltas", "adversaries", "seed",
                                                "max_rounds", "mode", "out", "trials")}
    if not multi:
        for k in ("Ls", "deltas", "adversaries"):
            if over[k] is not None:
                over[k] = (over[k],)
        over["trials"] = 1
    return load_config(args.config, **over)


def cmd_run(args) -> int:
    cfg = _config(args, multi=False)
    L, delta, adv = cfg.Ls[0], cfg.deltas[0], cfg.adversaries[0]
    rep, ch = run_trial(L, delta, adv, cfg.seed, cfg.mode, cfg.max_rounds,
                        record=bool(args.transcript))
    row = make_row(rep, adv, cfg.mode)
    text = json.dumps(row, indent=2)
    print(text)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text + "\n")
    if args.transcript:
        with open(args.transcript, "w", encoding="utf-8", newline="") as fh:
            fh.write(ch.transcript_csv())
    return 0 if rep.success else 1


def cmd_sweep(args) -> int:
    cfg = _config(args, multi=True)

    def progress(done, total):
        if not args.quiet and (done % 100 == 0 or done == total):
            print(f"\r{done}/{total}", end="", file=sys.stderr, flush=True)

    res = run_sweep(cfg, progress=progress)
    if not args.quiet:
        print(file=sys.stderr)
    cols = ("adversary", "L", "delta", "trials", "failures", "incomplete", "limit", "meanSent",
            "meanT", "meanRounds", "boundViolations")
    print("\t".join(cols))
    ok = True
    for c in res.cells():
        ok &= c["rateOk"] and not c["boundViolations"] and not c["badTupleViolations"]
        print("\t".join(f"{c[k]:.4g}" if isinstance(c[k], float) else str(c[k]) for k in cols))
    if cfg.out:
        print(f"wrote {len(res.rows)} rows to {cfg.out}", file=sys.stderr)
    return 0 if ok else 1


def cmd_validate(args) -> int:
    ok = True
    for r in validate_silence_bound(args.b, args.samples, args.seed):
        ok &= r["ok"]
        print(f"silence b={r['b']}: observed {r['observed']:.3e} bound {r['bound']:.3e} "
              f"{'ok' if r['ok'] else 'VIOLATED'}")
    census = alternation_census(10)
    ok &= census["ok"]
    print(f"alternation census b=10: {'ok' if census['ok'] else 'MISMATCH'}")
    if args.csv:
        rep = check_cost_bounds(read_csv(args.csv), HEADLINE_CONSTANTS)
        ok &= rep["ok"]
        print(f"cost bounds on {rep['rows']} rows: {len(rep['g_violations'])} g violations, "
              f"{len(rep['headline_violations'])} headline violations")
        for v in (rep["g_violations"] + rep["headline_violations"])[:20]:
            print("  ", v)
    return 0 if ok else 1


def cmd_replay(args) -> int:
    rows = read_csv(args.csv)
    if not 0 <= args.row < len(rows):
        raise ReplayError(f"row {args.row} out of range (0..{len(rows) - 1})")
    text = replay_transcript(rows[args.row], out=args.out)
    if args.out is None:
        sys.stdout.write(text)
    return 0


def cmd_adversaries(args) -> int:
    for name, cls in REGISTRY.items():
        tag = "" if name in BUNDLED else " (omniscient, outside the guarantees)"
        print(f"{name:24s} {cls.target}{tag}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "sweep": cmd_sweep, "validate": cmd_validate,
               "replay": cmd_replay, "adversaries": cmd_adversaries}[args.command]
    try:
        return handler(args)
    except (ConfigError, ReplayError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


__all__ = ["build_parser", "main"]
