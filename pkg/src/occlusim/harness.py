"""Seeded episode runner, yield/deceleration/emergency metrics, batch harness.

An episode runs sense -> assess -> command -> step until the ego reaches the
road end (success), hits a pedestrian (collision), or a tick budget expires
(timeout).  Yield events are tracked per pedestrian: an event opens when a
visible pedestrian first projects into the ego path, and closes when that
pedestrian is physically out of conflict (finished crossing, exited the path
band on the far side, or fully behind the ego).  A closed event counts as an
unsuccessful yield when emergency braking was engaged against that pedestrian
at any point, successful otherwise.  A collision drops all still-open events
and stops further yield accounting.

Batches derive per-episode seeds deterministically from the master seed and
present the identical scenario sequence to every controller, so comparisons
are paired.  Episodes are independent and may run across worker processes;
aggregation order is fixed by (controller, episode index).
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .baselines import BaselineController, BaselineSpec
from .config import CONTROLLER_IDS, RunConfig
from .control import FsmState, LongitudinalController, ProposedController, path_halfwidth
from .errors import ConfigError
from .visibility import compute_visibility
from .world import EGO_LENGTH, WorldState, detect_collision, generate_scenario, step_world

TRACE_SCHEMA_VERSION = 1
SUMMARY_SCHEMA_VERSION = 1

SUMMARY_HEADER = [
    "controller",
    "family",
    "mt1_succ",
    "mt1_unsucc",
    "mt2_mean",
    "mt2_std",
    "mt3",
    "mt4_mean",
    "mt4_std",
]


@dataclass
class EpisodeRecord:
    family: str
    seed: int
    controller: str
    outcome: str  # success | collision | timeout | error (diagnostic set)
    n_ticks: int
    dt: float
    yields_successful: int
    yields_unsuccessful: int
    decel_count: int
    decel_sum: float
    decel_sumsq: float
    emergency_time: float
    collision_pedestrian: Optional[int] = None
    diagnostic: Optional[str] = None
    trace: Optional[list[dict]] = None

    @property
    def duration(self) -> float:
        return self.n_ticks * self.dt


@dataclass(frozen=True)
class SummaryRow:
    controller: str
    family: str
    mt1_succ: int
    mt1_unsucc: int
    mt2_mean: float
    mt2_std: float
    mt3: int
    mt4_mean: float
    mt4_std: float


@dataclass
class BatchSummary:
    master_seed: int
    n_episodes: int
    rows: list[SummaryRow] = field(default_factory=list)

    def row(self, controller: str, family: str) -> SummaryRow:
        for r in self.rows:
            if r.controller == controller and r.family == family:
                return r
        raise KeyError((controller, family))


def make_controller(name: str, cfg: RunConfig) -> LongitudinalController:
    if name not in CONTROLLER_IDS:
        raise ConfigError(f"unknown controller {name!r}; expected one of {CONTROLLER_IDS}")
    common = dict(
        road=cfg.road,
        sensor=cfg.sensor,
        thresholds=cfg.thresholds,
        gains=cfg.gains,
        comfort=cfg.braking.comfort_profile(),
        physical=cfg.braking.physical_profile(cfg.road),
        dt=cfg.harness.dt,
    )
    if name == "proposed":
        return ProposedController(weights=cfg.weights, obs_params=cfg.observation, **common)
    spec = cfg.baseline_b3 if name == "B3" else BaselineSpec(name)
    return BaselineController(spec, **common)


def episode_seed(master_seed: int, index: int) -> int:
    """Deterministic 64-bit scenario seed for episode `index` of a batch."""
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1, np.uint64)[0])


def timeout_ticks(cfg: RunConfig) -> int:
    slow = cfg.thresholds.alpha2 * cfg.road.speed_limit
    return int(math.ceil(cfg.harness.timeout_factor * cfg.road.length / slow / cfg.harness.dt))


def _event_closed(ped, ego_position: float, lane_y: float) -> bool:
    """Physically out of conflict (visibility-independent, so occlusion flicker
    cannot split one yield interaction into two)."""
    if ped.state == "crossed":
        return True
    if ped.x < ego_position - EGO_LENGTH:
        return True
    return ped.direction != 0 and ped.direction * (ped.y - lane_y) > path_halfwidth()


def _finite(x: float) -> Optional[float]:
    return None if x is None or not math.isfinite(x) else x


def run_episode(
    cfg: RunConfig,
    seed: int,
    controller_name: str,
    record_trace: bool = False,
    record_polygon: bool = False,
) -> EpisodeRecord:
    """One seeded episode under one controller."""
    world = generate_scenario(cfg.scenario_config(seed))
    return simulate(cfg, world, controller_name, cfg.scenario.family, seed, record_trace, record_polygon)


def simulate(
    cfg: RunConfig,
    world: WorldState,
    controller_name: str,
    family: str = "scripted",
    seed: int = 0,
    record_trace: bool = False,
    record_polygon: bool = False,
) -> EpisodeRecord:
    """Drive a prebuilt world to termination (also used for scripted scenarios)."""
    controller = make_controller(controller_name, cfg)
    dt = cfg.harness.dt
    budget = timeout_ticks(cfg)
    delay = cfg.harness.actuation_delay_ticks
    pending = [0.0] * delay  # dead-time buffer between command and actuation

    events: dict[int, bool] = {}  # open yield events: ped id -> emergency engaged
    resolved: dict[int, bool] = {}  # closed events: ped id -> emergency engaged
    decel_count, decel_sum, decel_sumsq = 0, 0.0, 0.0
    emergency_time = 0.0
    trace: Optional[list[dict]] = [] if record_trace else None
    outcome = "timeout"
    diagnostic: Optional[str] = None
    collision_ped: Optional[int] = None
    peds_by_id = {p.id: p for p in world.pedestrians}
    n_ticks = 0

    # inconsistencies must not propagate out of an episode: they produce a
    # diagnostic-tagged failed record instead
    try:
        for k in range(budget):
            vis = compute_visibility(world, cfg.sensor)
            cmd, diag = controller.act(world, vis)

            for pid in diag.in_path_ids:
                if pid not in events and pid not in resolved:
                    events[pid] = False
            if cmd.fsm_state is FsmState.EMERGENCY and diag.target_id in events:
                events[diag.target_id] = True

            if cmd.accel_out < 0.0:
                decel_count += 1
                decel_sum += cmd.accel_out
                decel_sumsq += cmd.accel_out * cmd.accel_out
            if cmd.fsm_state is FsmState.EMERGENCY:
                emergency_time += dt

            if trace is not None:
                row = {
                    "t": k,
                    "time": world.time,
                    "ego_position": world.ego.position,
                    "ego_velocity": world.ego.velocity,
                    "ego_acceleration": world.ego.acceleration,
                    "ego_previous_jerk": world.ego.previous_jerk,
                    "fsm": cmd.fsm_state.value,
                    "v_ref": cmd.v_ref,
                    "a_limit": _finite(cmd.a_limit),
                    "j_limit": _finite(cmd.j_limit),
                    "accel_out": cmd.accel_out,
                    "visible_pedestrians": list(vis.visible_pedestrian_ids),
                    "visible_parked_cars": list(vis.visible_parked_car_indices),
                    "crosswalk_visible": vis.crosswalk_visible,
                    "in_path": list(diag.in_path_ids),
                    "target": diag.target_id,
                    "ttc": _finite(diag.ttc),
                    "zone": diag.zone,
                    "risk_danger": diag.max_risk_danger,
                    "risk_discomfort": diag.max_risk_discomfort,
                    "d_stop_min": diag.risk_zones.d_stop_min,
                    "d_stop_comfort": diag.risk_zones.d_stop_comfort,
                    "pedestrian_states": {p.id: p.state for p in world.pedestrians},
                }
                if record_polygon:
                    row["polygon"] = [[x, y] for x, y in vis.polygon]
                trace.append(row)

            if delay:
                pending.append(cmd.accel_out)
                applied = pending.pop(0)
            else:
                applied = cmd.accel_out
            world = step_world(world, applied, dt)
            peds_by_id = {p.id: p for p in world.pedestrians}
            n_ticks = k + 1

            for pid in list(events):
                if _event_closed(peds_by_id[pid], world.ego.position, world.road.ego_lane_y):
                    resolved[pid] = events.pop(pid)

            hit = detect_collision(world)
            if hit is not None:
                outcome = "collision"
                collision_ped = hit
                events.clear()  # collision: no further yield accounting
                break
            if world.ego.position >= world.road.length:
                outcome = "success"
                break
    except Exception as exc:  # noqa: BLE001
        outcome = "error"
        diagnostic = f"{type(exc).__name__}: {exc}"
        events.clear()

    if outcome != "collision":
        # interactions still open at episode end resolve by their emergency flag
        for pid, had_emergency in events.items():
            resolved[pid] = had_emergency

    return EpisodeRecord(
        family=family,
        seed=seed,
        controller=controller_name,
        outcome=outcome,
        n_ticks=n_ticks,
        dt=dt,
        yields_successful=sum(1 for v in resolved.values() if not v),
        yields_unsuccessful=sum(1 for v in resolved.values() if v),
        decel_count=decel_count,
        decel_sum=decel_sum,
        decel_sumsq=decel_sumsq,
        emergency_time=emergency_time,
        collision_pedestrian=collision_ped,
        diagnostic=diagnostic,
        trace=trace,
    )


def _episode_task(args) -> EpisodeRecord:
    cfg, controller_name, seed = args
    return run_episode(cfg, seed, controller_name)


def summarize(records: list[EpisodeRecord], master_seed: int, n_episodes: int) -> BatchSummary:
    """Exact aggregation of per-episode records into one row per (controller, family)."""
    groups: dict[tuple[str, str], list[EpisodeRecord]] = {}
    order: list[tuple[str, str]] = []
    for r in records:
        key = (r.controller, r.family)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(r)
    summary = BatchSummary(master_seed=master_seed, n_episodes=n_episodes)
    for key in order:
        rs = groups[key]
        n_dec = sum(r.decel_count for r in rs)
        s_dec = sum(r.decel_sum for r in rs)
        ss_dec = sum(r.decel_sumsq for r in rs)
        if n_dec:
            mean = s_dec / n_dec
            var = max(0.0, ss_dec / n_dec - mean * mean)
            m2 = (mean, math.sqrt(var))
        else:
            m2 = (0.0, 0.0)
        etimes = np.array([r.emergency_time for r in rs])
        summary.rows.append(
            SummaryRow(
                controller=key[0],
                family=key[1],
                mt1_succ=sum(r.yields_successful for r in rs),
                mt1_unsucc=sum(r.yields_unsuccessful for r in rs),
                mt2_mean=m2[0],
                mt2_std=m2[1],
                mt3=sum(1 for r in rs if r.outcome == "success"),
                mt4_mean=float(etimes.mean()),
                mt4_std=float(etimes.std()),
            )
        )
    return summary


def run_batch(
    cfg: RunConfig,
    controllers: list[str],
    n_episodes: Optional[int] = None,
    workers: Optional[int] = None,
) -> tuple[BatchSummary, list[EpisodeRecord]]:
    """Paired-seed batch: every controller sees the identical scenario sequence."""
    for c in controllers:
        if c not in CONTROLLER_IDS:
            raise ConfigError(f"unknown controller {c!r}")
    n = cfg.harness.n_episodes if n_episodes is None else n_episodes
    if n < 1:
        raise ConfigError("n_episodes must be >= 1")
    n_workers = workers if workers is not None else cfg.harness.workers
    if n_workers == 0:
        n_workers = os.cpu_count() or 1
    seeds = [episode_seed(cfg.harness.master_seed, i) for i in range(n)]
    tasks = [(cfg, c, s) for c in controllers for s in seeds]
    if n_workers > 1 and len(tasks) > 1:
        chunk = max(1, len(tasks) // (n_workers * 8))
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            records = list(pool.map(_episode_task, tasks, chunksize=chunk))
    else:
        records = [_episode_task(t) for t in tasks]
    return summarize(records, cfg.harness.master_seed, n), records


# --- file outputs -----------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, float) else str(x)


def write_summary_csv(summary: BatchSummary, path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(SUMMARY_HEADER)
        for r in summary.rows:
            w.writerow(
                [
                    r.controller,
                    r.family,
                    r.mt1_succ,
                    r.mt1_unsucc,
                    _fmt(r.mt2_mean),
                    _fmt(r.mt2_std),
                    r.mt3,
                    _fmt(r.mt4_mean),
                    _fmt(r.mt4_std),
                ]
            )


def write_summary_json(summary: BatchSummary, path: str | Path) -> None:
    doc = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "master_seed": summary.master_seed,
        "n_episodes": summary.n_episodes,
        "rows": [dataclasses.asdict(r) for r in summary.rows],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_summary_csv(path: str | Path) -> list[SummaryRow]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != SUMMARY_HEADER:
            raise ConfigError(f"unexpected summary header {header}")
        return [
            SummaryRow(
                controller=row[0],
                family=row[1],
                mt1_succ=int(row[2]),
                mt1_unsucc=int(row[3]),
                mt2_mean=float(row[4]),
                mt2_std=float(row[5]),
                mt3=int(row[6]),
                mt4_mean=float(row[7]),
                mt4_std=float(row[8]),
            )
            for row in reader
        ]


def write_outcomes_csv(records: list[EpisodeRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            ["controller", "family", "episode", "seed", "outcome", "yields_succ", "yields_unsucc", "emergency_time"]
        )
        by_ctrl_count: dict[str, int] = {}
        for r in records:
            i = by_ctrl_count.get(r.controller, 0)
            by_ctrl_count[r.controller] = i + 1
            w.writerow(
                [r.controller, r.family, i, r.seed, r.outcome, r.yields_successful, r.yields_unsuccessful, _fmt(r.emergency_time)]
            )


def write_trace_jsonl(record: EpisodeRecord, path: str | Path) -> None:
    if record.trace is None:
        raise ConfigError("episode was run without trace recording")
    header = {
        "schema_version": TRACE_SCHEMA_VERSION,
        "kind": "trace",
        "family": record.family,
        "seed": record.seed,
        "controller": record.controller,
        "dt": record.dt,
        "outcome": record.outcome,
        "n_ticks": record.n_ticks,
    }
    with open(path, "w") as f:
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for row in record.trace:
            f.write(json.dumps(row) + "\n")


def record_to_dict(record: EpisodeRecord) -> dict:
    d = dataclasses.asdict(record)
    d.pop("trace")
    return d
