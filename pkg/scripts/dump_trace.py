#!/usr/bin/env python3
"""Run one seeded episode and dump its full tick trace (with the visibility
polygon) for the plotting frontend.

Usage: python scripts/dump_trace.py --family sc2 --seed 7 --controller proposed --out trace.jsonl
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from occlusim.config import apply_overrides, load_config  # noqa: E402
from occlusim.harness import run_episode, write_trace_jsonl  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--family", default="sc2")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--controller", default="proposed")
    ap.add_argument("--config", default=None)
    ap.add_argument("--out", default="trace.jsonl")
    args = ap.parse_args()

    cfg = apply_overrides(load_config(args.config), family=args.family, seed=args.seed)
    rec = run_episode(cfg, args.seed, args.controller, record_trace=True, record_polygon=True)
    write_trace_jsonl(rec, args.out)
    print(
        f"{rec.controller} {rec.family} seed={rec.seed}: {rec.outcome}, "
        f"{rec.n_ticks} ticks -> {args.out}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
