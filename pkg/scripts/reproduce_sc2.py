#!/usr/bin/env python3
"""Desk-scale reproduction of the mildly-crowded-urban comparison.

Runs the paired-seed sc2 batch for the proposed controller and all three
baselines, writes summary/outcome files into results/sc2/, and prints the
metric table with the headline comparisons.

Usage: python scripts/reproduce_sc2.py [--episodes N] [--workers W] [--out DIR]
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from occlusim.config import load_config, save_config  # noqa: E402
from occlusim.harness import (  # noqa: E402
    run_batch,
    write_outcomes_csv,
    write_summary_csv,
    write_summary_json,
)

CONTROLLERS = ["proposed", "B1", "B2", "B3"]


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--episodes", type=int, default=200)
    ap.add_argument("--workers", type=int, default=0)
    ap.add_argument("--out", default="results/sc2")
    ap.add_argument("--config", default=None)
    args = ap.parse_args()

    cfg = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.time()
    summary, records = run_batch(cfg, CONTROLLERS, n_episodes=args.episodes, workers=args.workers or None)
    save_config(cfg, out / "config.yaml")
    write_summary_csv(summary, out / "summary.csv")
    write_summary_json(summary, out / "summary.json")
    write_outcomes_csv(records, out / "outcomes.csv")

    print(f"\n{args.episodes} paired episodes x {len(CONTROLLERS)} controllers in {time.time()-t0:.0f} s\n")
    print(f"{'controller':10s} {'mt1 (succ/unsucc)':>18s} {'mt2 (mean, std)':>18s} {'mt3':>5s} {'mt4 (mean, std)':>17s}")
    for r in summary.rows:
        print(
            f"{r.controller:10s} {f'({r.mt1_succ}/{r.mt1_unsucc})':>18s} "
            f"{f'({r.mt2_mean:.2f}, {r.mt2_std:.2f})':>18s} {r.mt3:>5d} "
            f"{f'({r.mt4_mean:.2f}, {r.mt4_std:.2f})':>17s}"
        )
    rows = {r.controller: r for r in summary.rows}
    p, b1 = rows["proposed"], rows["B1"]
    print(f"\nsuccessful finishes: proposed {p.mt3} vs B1 {b1.mt3} (+{p.mt3 - b1.mt3})")
    print(f"emergency time: proposed {p.mt4_mean:.2f} s vs baselines "
          f"{', '.join(f'{rows[c].mt4_mean:.2f}' for c in ('B1', 'B2', 'B3'))}")
    print(f"mean deceleration: proposed {p.mt2_mean:.2f} vs B1 {b1.mt2_mean:.2f} m/s^2")
    print(f"\nfiles in {out}/: summary.csv summary.json outcomes.csv config.yaml")
    return 0


if __name__ == "__main__":
    sys.exit(main())
