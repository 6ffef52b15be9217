"""Command-line entry point.

Subcommands: generate (scenario file), run (single episode + optional trace),
batch (paired-seed experiment, summary files), gains (Riccati synthesis
report).  Exit codes are a stable contract: 0 success, 1 unsafe episode
outcome (collision/timeout), 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness
from .config import CONTROLLER_IDS, apply_overrides, load_config, save_config
from .control import (
    DEFAULT_K_CRUISE,
    DEFAULT_K_YIELD,
    build_state_spaces,
    synthesize_gains,
)
from .errors import ConfigError, GainSynthesisError
from .world import generate_scenario, world_to_yaml

EXIT_OK = 0
EXIT_UNSAFE = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="occlusim")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a scenario file")
    g.add_argument("--config", default=None)
    g.add_argument("--family", default=None, choices=None)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", required=True)

    r = sub.add_parser("run", help="run one episode")
    r.add_argument("--config", default=None)
    r.add_argument("--controller", default="proposed")
    r.add_argument("--family", default=None)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--dt", type=float, default=None)
    r.add_argument("--out", default=None, help="episode record YAML path")
    r.add_argument("--trace", default=None, help="trace JSONL path")
    r.add_argument("--polygon", action="store_true", help="include the visibility polygon in the trace")

    b = sub.add_parser("batch", help="run a paired-seed batch")
    b.add_argument("--config", default=None)
    b.add_argument("--controller", action="append", default=None, help="repeatable; default: all")
    b.add_argument("--family", default=None)
    b.add_argument("--seed", type=int, default=None)
    b.add_argument("--episodes", type=int, default=None)
    b.add_argument("--workers", type=int, default=None)
    b.add_argument("--dt", type=float, default=None)
    b.add_argument("--out", required=True, help="output directory")

    k = sub.add_parser("gains", help="synthesize LQR gains and report the closed loop")
    k.add_argument("--mode", choices=("cruise", "yield"), default="cruise")
    k.add_argument("--dt", type=float, default=0.1)
    k.add_argument("--sweep", action="store_true", help="sweep dt in [0.01, 0.5]")
    k.add_argument("--config", default=None)
    return p


def _load(args) -> "RunConfig":
    cfg = load_config(getattr(args, "config", None))
    return apply_overrides(
        cfg,
        family=getattr(args, "family", None),
        seed=getattr(args, "seed", None),
        episodes=getattr(args, "episodes", None),
        workers=getattr(args, "workers", None),
        dt=getattr(args, "dt", None),
    )


def cmd_generate(args) -> int:
    cfg = _load(args)
    world = generate_scenario(cfg.scenario_config(cfg.harness.master_seed))
    out = Path(args.out)
    text = world_to_yaml(world)
    try:
        out.write_text(text)
    except OSError as exc:
        print(f"error: cannot write {out}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote scenario {cfg.scenario.family} seed={cfg.harness.master_seed} -> {out}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load(args)
    if args.controller not in CONTROLLER_IDS:
        raise ConfigError(f"unknown controller {args.controller!r}")
    record = harness.run_episode(
        cfg,
        seed=cfg.harness.master_seed,
        controller_name=args.controller,
        record_trace=args.trace is not None,
        record_polygon=args.polygon,
    )
    if args.trace is not None:
        harness.write_trace_jsonl(record, args.trace)
    if args.out is not None:
        import yaml

        Path(args.out).write_text(yaml.safe_dump(harness.record_to_dict(record), sort_keys=True))
    print(
        f"{record.controller} {record.family} seed={record.seed}: {record.outcome} "
        f"in {record.duration:.1f} s, yields {record.yields_successful}/{record.yields_unsuccessful}, "
        f"emergency {record.emergency_time:.2f} s"
    )
    return EXIT_OK if record.outcome == "success" else EXIT_UNSAFE


def cmd_batch(args) -> int:
    cfg = _load(args)
    controllers = args.controller or list(CONTROLLER_IDS)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary, records = harness.run_batch(cfg, controllers)
    save_config(cfg, out_dir / "config.yaml")  # resolved config echoed per run
    harness.write_summary_csv(summary, out_dir / "summary.csv")
    harness.write_summary_json(summary, out_dir / "summary.json")
    harness.write_outcomes_csv(records, out_dir / "outcomes.csv")
    for row in summary.rows:
        print(
            f"{row.controller:9s} {row.family}: mt1=({row.mt1_succ}/{row.mt1_unsucc}) "
            f"mt2=({row.mt2_mean:.2f}, {row.mt2_std:.2f}) mt3={row.mt3} "
            f"mt4=({row.mt4_mean:.2f}, {row.mt4_std:.2f})"
        )
    print(f"wrote {out_dir}/summary.csv, summary.json, outcomes.csv, config.yaml")
    return EXIT_OK


def _gain_report(mode: str, dt: float, cfg) -> None:
    a_crs, b_crs, a_yld, b_yld = build_state_spaces(dt, cfg.gains.j1, cfg.gains.j2)
    if mode == "cruise":
        A, B, Q, R = a_crs, b_crs, np.array(cfg.gains.q_crs), np.array(cfg.gains.r_crs)
        reference = np.array(DEFAULT_K_CRUISE)
    else:
        A, B, Q, R = a_yld, b_yld, np.array(cfg.gains.q_yld), np.array(cfg.gains.r_yld)
        reference = np.array(DEFAULT_K_YIELD)
    K = synthesize_gains(Q, R, A, B)
    eig = np.abs(np.linalg.eigvals(A - B @ np.atleast_2d(K)))
    dev = float(np.max(np.abs(K - reference)))
    print(
        f"dt={dt:6.3f} {mode}: K={np.array2string(K, precision=4)} "
        f"closed-loop |eig|={np.array2string(np.sort(eig)[::-1], precision=4)} "
        f"max|K - K_default|={dev:.4f}"
    )


def cmd_gains(args) -> int:
    cfg = load_config(args.config)
    reference = DEFAULT_K_CRUISE if args.mode == "cruise" else DEFAULT_K_YIELD
    print(f"shipped default K_{args.mode} = {list(reference)}")
    dts = np.arange(0.01, 0.501, 0.01) if args.sweep else [args.dt]
    for dt in dts:
        _gain_report(args.mode, float(dt), cfg)
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "generate":
            return cmd_generate(args)
        if args.command == "run":
            return cmd_run(args)
        if args.command == "batch":
            return cmd_batch(args)
        if args.command == "gains":
            return cmd_gains(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GainSynthesisError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
