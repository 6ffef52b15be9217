"""Ground-truth scenario world: straight 3-lane road, parked cars, pedestrians, ego.

Geometry convention: x runs along the road (ego drives toward +x), y is lateral
with the road centered on y = 0.  The ego occupies the middle lane; its
longitudinal position is the front-bumper x coordinate.  Parking strips sit
just outside the roadway edges (left = +y, right = -y) and sidewalk
centerlines run beyond the strips.  All randomness is drawn from a single
PCG64 generator in a fixed order, so one (family, seed) pair always produces
the same world.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import yaml

from .errors import ConfigError

G = 9.81  # m/s^2

SCENARIO_SCHEMA_VERSION = 1

# fixed geometry, meters
SLOT_LENGTH = 6.0
PARKING_STRIP_WIDTH = 2.0
SIDEWALK_SETBACK = 0.5  # sidewalk centerline beyond the parking strip
EGO_LENGTH = 4.5
EGO_WIDTH = 1.8
PARKED_CAR_LENGTH = 4.5
PARKED_CAR_WIDTH = 1.8

FAMILIES = ("sc1", "sc2", "sc3")


@dataclass(frozen=True)
class Road:
    length: float = 96.0
    lane_count: int = 3
    lane_width: float = 3.0
    speed_limit: float = 30.0 / 3.6  # 30 km/h
    friction_mu: float = 0.8
    crosswalk_position: float = 48.0  # longitudinal center
    crosswalk_width: float = 3.0

    def __post_init__(self):
        if self.length <= 0 or self.lane_count < 1 or self.lane_width <= 0:
            raise ConfigError("road must have positive length/lane_width and >= 1 lane")
        if not (0.0 <= self.crosswalk_position <= self.length):
            raise ConfigError(f"crosswalk at {self.crosswalk_position} outside [0, {self.length}]")
        if not (0.0 < self.friction_mu <= 1.2):
            raise ConfigError(f"friction_mu {self.friction_mu} outside (0, 1.2]")
        if self.speed_limit <= 0 or self.crosswalk_width <= 0:
            raise ConfigError("speed_limit and crosswalk_width must be positive")

    @property
    def half_width(self) -> float:
        return self.lane_count * self.lane_width / 2.0

    @property
    def sidewalk_y(self) -> float:
        """|y| of the sidewalk centerline on either side."""
        return self.half_width + PARKING_STRIP_WIDTH + SIDEWALK_SETBACK

    @property
    def ego_lane_y(self) -> float:
        """Centerline of the ego's lane: the curbside (rightmost, -y) lane."""
        return -(self.half_width - self.lane_width / 2.0)

    @property
    def a_max(self) -> float:
        return self.friction_mu * G


@dataclass(frozen=True)
class ParkedCar:
    longitudinal_position: float  # rear edge
    length: float
    width: float
    side: str  # "left" (+y) | "right" (-y)
    lateral_offset: float  # gap between road edge and the car's near side

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ConfigError(f"side must be left/right, got {self.side!r}")
        if self.length <= 0 or self.width <= 0 or self.lateral_offset < 0:
            raise ConfigError("parked car must have positive size and offset >= 0")

    def rect(self, road: Road) -> tuple[float, float, float, float]:
        """Axis-aligned footprint (x0, y0, x1, y1)."""
        x0 = self.longitudinal_position
        x1 = x0 + self.length
        near = road.half_width + self.lateral_offset
        far = near + self.width
        if self.side == "left":
            return (x0, near, x1, far)
        return (x0, -far, x1, -near)

    def centroid(self, road: Road) -> tuple[float, float]:
        x0, y0, x1, y1 = self.rect(road)
        return ((x0 + x1) / 2.0, (y0 + y1) / 2.0)


PED_STATES = ("waiting", "crossing", "crossed", "hit")


@dataclass(frozen=True)
class Pedestrian:
    id: int
    x: float
    y: float
    walking_speed: float
    will_cross: bool
    trigger_kind: str = "ego_distance"  # "ego_distance" | "time"
    trigger_value: float = 0.0
    state: str = "waiting"
    # lateral heading while crossing: +1 walks toward +y, -1 toward -y, 0 never moves
    direction: int = 0

    def __post_init__(self):
        if self.walking_speed <= 0:
            raise ConfigError(f"walking_speed must be > 0, got {self.walking_speed}")
        if self.state not in PED_STATES:
            raise ConfigError(f"unknown pedestrian state {self.state!r}")
        if self.trigger_kind not in ("ego_distance", "time"):
            raise ConfigError(f"unknown trigger kind {self.trigger_kind!r}")

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class EgoState:
    position: float = 0.0  # front bumper x
    velocity: float = 0.0
    acceleration: float = 0.0
    previous_jerk: float = 0.0

    def __post_init__(self):
        if self.velocity < 0:
            raise ConfigError("ego velocity must be >= 0 (no reversing)")

    def footprint(self, lane_y: float) -> tuple[float, float, float, float]:
        return (
            self.position - EGO_LENGTH,
            lane_y - EGO_WIDTH / 2.0,
            self.position,
            lane_y + EGO_WIDTH / 2.0,
        )


@dataclass(frozen=True)
class ScenarioConfig:
    """Seeded generation parameters for one scenario family."""

    family: str
    seed: int
    pedestrian_count: tuple[int, int] = (1, 2)
    parked_car_count: tuple[int, int] = (1, 2)  # ignored for sc3 (slots are full)
    non_crossing_fraction: float = 0.3
    tick: float = 0.1
    initial_speed: float = 0.0  # ego enters the block from a stop by default
    trigger_gap_range: tuple[float, float] = (10.0, 30.0)
    crosswalk_band: tuple[float, float] = (20.0, 76.0)
    road: Road = field(default_factory=Road)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown scenario family {self.family!r}")
        lo, hi = self.pedestrian_count
        clo, chi = self.parked_car_count
        if not (0 <= lo <= hi) or not (0 <= clo <= chi):
            raise ConfigError("count ranges must satisfy 0 <= lo <= hi")
        if not (0.0 <= self.non_crossing_fraction <= 1.0):
            raise ConfigError("non_crossing_fraction must be in [0, 1]")
        if self.tick <= 0:
            raise ConfigError("tick must be positive")
        glo, ghi = self.trigger_gap_range
        if not (0.0 <= glo <= ghi):
            raise ConfigError("trigger_gap_range must satisfy 0 <= lo <= hi")
        blo, bhi = self.crosswalk_band
        if not (0.0 <= blo <= bhi <= self.road.length):
            raise ConfigError("crosswalk_band must lie inside the road")
        if self.initial_speed < 0:
            raise ConfigError("initial_speed must be >= 0")


# per-family default count ranges
FAMILY_DEFAULTS = {
    "sc1": {"pedestrian_count": (1, 2), "parked_car_count": (1, 2)},
    "sc2": {"pedestrian_count": (10, 20), "parked_car_count": (6, 12)},
    "sc3": {"pedestrian_count": (12, 24), "parked_car_count": (0, 0)},  # cars: all slots
}


def scenario_config(family: str, seed: int, **overrides) -> ScenarioConfig:
    """ScenarioConfig with the family's default count ranges applied."""
    if family not in FAMILIES:
        raise ConfigError(f"unknown scenario family {family!r}")
    kwargs = dict(FAMILY_DEFAULTS[family])
    kwargs.update(overrides)
    return ScenarioConfig(family=family, seed=seed, **kwargs)


@dataclass(frozen=True)
class WorldState:
    """Full simulation truth at one tick; a pure value (stepping returns a new one)."""

    road: Road
    parked_cars: tuple[ParkedCar, ...]
    pedestrians: tuple[Pedestrian, ...]
    ego: EgoState
    time: float = 0.0

    @property
    def a_max(self) -> float:
        return self.road.a_max


def parking_slots(road: Road) -> list[tuple[str, float]]:
    """Usable (side, slot_start) pairs; slots overlapping the crosswalk are dropped."""
    n = int(road.length // SLOT_LENGTH)
    cw_lo = road.crosswalk_position - road.crosswalk_width / 2.0
    cw_hi = road.crosswalk_position + road.crosswalk_width / 2.0
    slots = []
    for side in ("left", "right"):
        for k in range(n):
            s = k * SLOT_LENGTH
            if s < cw_hi and s + SLOT_LENGTH > cw_lo:
                continue
            slots.append((side, s))
    return slots


def _sample_walking_speed(rng: np.random.Generator, mu: float = 1.5, sigma: float = 0.6) -> float:
    """Gaussian walking speed, rejection-resampled until positive."""
    while True:
        v = float(rng.normal(mu, sigma))
        if v > 0.0:
            return v


def generate_scenario(config: ScenarioConfig) -> WorldState:
    """Generate the initial WorldState for a (family, seed) pair.

    Draw order is fixed: crosswalk position, parked cars (count, slots,
    jitter, lateral offsets), then pedestrians (count, then per pedestrian:
    side, x, speed, crossing flag, trigger gap).
    """
    rng = np.random.Generator(np.random.PCG64(config.seed))

    cw = float(rng.uniform(*config.crosswalk_band))
    road = replace(config.road, crosswalk_position=cw)

    slots = parking_slots(road)
    if config.family == "sc3":
        chosen = list(range(len(slots)))
    else:
        lo, hi = config.parked_car_count
        if hi > len(slots):
            raise ConfigError(f"parked_car_count {config.parked_car_count} exceeds {len(slots)} slots")
        n_cars = int(rng.integers(lo, hi + 1))
        chosen = sorted(rng.choice(len(slots), size=n_cars, replace=False).tolist())
    cars = []
    for idx in chosen:
        side, s = slots[idx]
        jitter = float(rng.uniform(0.0, SLOT_LENGTH - PARKED_CAR_LENGTH))
        offset = float(rng.uniform(0.05, 0.2))
        cars.append(
            ParkedCar(
                longitudinal_position=s + jitter,
                length=PARKED_CAR_LENGTH,
                width=PARKED_CAR_WIDTH,
                side=side,
                lateral_offset=offset,
            )
        )

    lo, hi = config.pedestrian_count
    n_peds = int(rng.integers(lo, hi + 1))
    peds = []
    for pid in range(n_peds):
        side_left = bool(rng.integers(0, 2))
        y = road.sidewalk_y if side_left else -road.sidewalk_y
        x = float(rng.uniform(1.0, road.length - 1.0))
        speed = _sample_walking_speed(rng)
        will_cross = bool(rng.random() >= config.non_crossing_fraction)
        trigger = float(rng.uniform(*config.trigger_gap_range)) if will_cross else 0.0
        peds.append(
            Pedestrian(
                id=pid,
                x=x,
                y=y,
                walking_speed=speed,
                will_cross=will_cross,
                trigger_kind="ego_distance",
                trigger_value=trigger,
                direction=(-1 if side_left else 1) if will_cross else 0,
            )
        )

    ego = EgoState(position=0.0, velocity=config.initial_speed, acceleration=0.0, previous_jerk=0.0)
    world = WorldState(road=road, parked_cars=tuple(cars), pedestrians=tuple(peds), ego=ego)
    validate_world(world)
    return world


def validate_world(world: WorldState) -> None:
    """Check structural invariants; raises ConfigError on violation."""
    road = world.road
    by_side: dict[str, list[ParkedCar]] = {"left": [], "right": []}
    for car in world.parked_cars:
        if car.lateral_offset + car.width > PARKING_STRIP_WIDTH + 1e-9:
            raise ConfigError("parked car exceeds its parking strip")
        if car.longitudinal_position < -1e-9 or car.longitudinal_position + car.length > road.length + 1e-9:
            raise ConfigError("parked car outside road extent")
        by_side[car.side].append(car)
    for side, cars in by_side.items():
        cars = sorted(cars, key=lambda c: c.longitudinal_position)
        for a, b in zip(cars, cars[1:]):
            if a.longitudinal_position + a.length > b.longitudinal_position + 1e-9:
                raise ConfigError(f"parked cars overlap on the {side} side")
    ids = [p.id for p in world.pedestrians]
    if len(set(ids)) != len(ids):
        raise ConfigError("pedestrian ids must be unique")
    for p in world.pedestrians:
        if not p.will_cross and abs(p.y) < road.half_width:
            raise ConfigError(f"non-crossing pedestrian {p.id} inside the roadway")


# below this ego speed a blocked pedestrian detours behind the vehicle instead
# of walking into it; above it they cannot compensate for the vehicle's motion
SLOW_EGO_SPEED = 0.5


def step_world(world: WorldState, ego_accel_command: float, dt: float) -> WorldState:
    """One forward-Euler tick.

    The commanded acceleration is clamped to [-a_max, a_max]; velocity is
    clamped at 0 (no reversing); position advances with the pre-step velocity.
    Crossing triggers are evaluated against the pre-step ego/world, and newly
    or already triggered pedestrians move laterally this step.  A pedestrian
    whose next step would land inside a stationary or creeping ego walks
    around it instead (toward the rear, at walking speed), so only
    moving-vehicle conflicts count as collisions and a yielding ego cannot
    deadlock against a blocked pedestrian.
    """
    if dt <= 0 or not math.isfinite(ego_accel_command):
        raise ConfigError("dt must be > 0 and the command finite")
    ego = world.ego
    a_max = world.a_max
    a = min(max(ego_accel_command, -a_max), a_max)
    new_v = max(0.0, ego.velocity + dt * a)
    new_x = ego.position + dt * ego.velocity
    new_ego = EgoState(
        position=new_x,
        velocity=new_v,
        acceleration=a,
        previous_jerk=(a - ego.acceleration) / dt,
    )

    new_time = world.time + dt
    sidewalk = world.road.sidewalk_y
    fx0, fy0, fx1, fy1 = new_ego.footprint(world.road.ego_lane_y)
    ego_slow = new_v < SLOW_EGO_SPEED
    new_peds = []
    for p in world.pedestrians:
        if p.state == "waiting" and p.will_cross:
            gap = p.x - ego.position
            fires = (
                (p.trigger_kind == "ego_distance" and 0.0 <= gap <= p.trigger_value)
                or (p.trigger_kind == "time" and world.time >= p.trigger_value)
            )
            if fires:
                p = replace(p, state="crossing")
        if p.state == "crossing":
            y = p.y + p.direction * p.walking_speed * dt
            if ego_slow and fx0 <= p.x <= fx1 and fy0 <= y <= fy1:
                # blocked by a standing vehicle: pass behind it
                p = replace(p, x=p.x - p.walking_speed * dt)
            elif p.direction * y >= sidewalk:
                p = replace(p, y=y, state="crossed")
            else:
                p = replace(p, y=y)
        new_peds.append(p)

    new_peds = [
        replace(p, state="hit") if (p.state != "hit" and fx0 <= p.x <= fx1 and fy0 <= p.y <= fy1) else p
        for p in new_peds
    ]

    return WorldState(
        road=world.road,
        parked_cars=world.parked_cars,
        pedestrians=tuple(new_peds),
        ego=new_ego,
        time=new_time,
    )


def detect_collision(world: WorldState) -> Optional[int]:
    """Lowest pedestrian id whose point lies inside the ego footprint, else None."""
    x0, y0, x1, y1 = world.ego.footprint(world.road.ego_lane_y)
    inside = [p.id for p in world.pedestrians if x0 <= p.x <= x1 and y0 <= p.y <= y1]
    return min(inside) if inside else None


# --- serialization (scenario schema v1, YAML) ---

def world_to_dict(world: WorldState) -> dict:
    return {
        "schema_version": SCENARIO_SCHEMA_VERSION,
        "road": {
            "length": world.road.length,
            "lane_count": world.road.lane_count,
            "lane_width": world.road.lane_width,
            "speed_limit": world.road.speed_limit,
            "friction_mu": world.road.friction_mu,
            "crosswalk_position": world.road.crosswalk_position,
            "crosswalk_width": world.road.crosswalk_width,
        },
        "parked_cars": [
            {
                "longitudinal_position": c.longitudinal_position,
                "length": c.length,
                "width": c.width,
                "side": c.side,
                "lateral_offset": c.lateral_offset,
            }
            for c in world.parked_cars
        ],
        "pedestrians": [
            {
                "id": p.id,
                "x": p.x,
                "y": p.y,
                "walking_speed": p.walking_speed,
                "will_cross": p.will_cross,
                "trigger_kind": p.trigger_kind,
                "trigger_value": p.trigger_value,
                "state": p.state,
                "direction": p.direction,
            }
            for p in world.pedestrians
        ],
        "ego": {
            "position": world.ego.position,
            "velocity": world.ego.velocity,
            "acceleration": world.ego.acceleration,
            "previous_jerk": world.ego.previous_jerk,
        },
        "time": world.time,
    }


def world_from_dict(data: dict) -> WorldState:
    version = data.get("schema_version")
    if version != SCENARIO_SCHEMA_VERSION:
        raise ConfigError(f"unsupported scenario schema version {version!r}")
    try:
        world = WorldState(
            road=Road(**data["road"]),
            parked_cars=tuple(ParkedCar(**c) for c in data["parked_cars"]),
            pedestrians=tuple(Pedestrian(**p) for p in data["pedestrians"]),
            ego=EgoState(**data["ego"]),
            time=float(data.get("time", 0.0)),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed scenario document: {exc}") from exc
    validate_world(world)
    return world


def world_to_yaml(world: WorldState) -> str:
    return yaml.safe_dump(world_to_dict(world), sort_keys=True, default_flow_style=False)


def world_from_yaml(text: str) -> WorldState:
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ConfigError("scenario document must be a mapping")
    return world_from_dict(data)
