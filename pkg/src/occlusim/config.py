"""Run configuration: one YAML document covering every tunable, strict-validated.

The file is a nested mapping mirroring RunConfig's sections.  Unknown keys are
rejected so typos cannot silently fall back to defaults, and the whole config
is validated (including closed-loop stability of the gains at the configured
dt) before anything runs.  Command-line overrides win over file values; the
resolved config is echoed into every output directory.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .baselines import BaselineSpec
from .control import GainSet, PolicyThresholds, ZoneThresholds
from .errors import ConfigError
from .estimator import EmergenceWeights, ObservationParams
from .riskzones import BrakingProfile
from .visibility import SensorSpec
from .world import FAMILIES, Road, ScenarioConfig, scenario_config

CONTROLLER_IDS = ("proposed", "B1", "B2", "B3")


@dataclass(frozen=True)
class BrakingConfig:
    a_comfort: float = 2.0
    t_ramp_comfort: float = 0.9
    t_ramp_min: float = 0.3

    def comfort_profile(self) -> BrakingProfile:
        return BrakingProfile(self.a_comfort, self.t_ramp_comfort)

    def physical_profile(self, road: Road) -> BrakingProfile:
        return BrakingProfile(road.a_max, self.t_ramp_min)


@dataclass(frozen=True)
class ScenarioSection:
    family: str = "sc2"
    pedestrian_count: Optional[tuple[int, int]] = None  # None -> family default
    parked_car_count: Optional[tuple[int, int]] = None
    non_crossing_fraction: float = 0.3
    initial_speed: float = 0.0
    trigger_gap_range: tuple[float, float] = (10.0, 30.0)
    crosswalk_band: tuple[float, float] = (20.0, 76.0)

    def build(self, seed: int, road: Road, tick: float) -> ScenarioConfig:
        overrides = dict(
            non_crossing_fraction=self.non_crossing_fraction,
            initial_speed=self.initial_speed,
            trigger_gap_range=tuple(self.trigger_gap_range),
            crosswalk_band=tuple(self.crosswalk_band),
            road=road,
            tick=tick,
        )
        if self.pedestrian_count is not None:
            overrides["pedestrian_count"] = tuple(self.pedestrian_count)
        if self.parked_car_count is not None:
            overrides["parked_car_count"] = tuple(self.parked_car_count)
        return scenario_config(self.family, seed, **overrides)


@dataclass(frozen=True)
class HarnessConfig:
    dt: float = 0.1
    master_seed: int = 1234
    n_episodes: int = 200
    workers: int = 0  # 0 -> logical cores
    timeout_factor: float = 3.0  # x time to traverse the road at alpha2 * speed limit
    actuation_delay_ticks: int = 0

    def __post_init__(self):
        if self.dt <= 0 or self.n_episodes < 1 or self.timeout_factor <= 0:
            raise ConfigError("dt, n_episodes and timeout_factor must be positive")
        if self.workers < 0 or self.actuation_delay_ticks < 0:
            raise ConfigError("workers and actuation_delay_ticks must be >= 0")


@dataclass(frozen=True)
class RunConfig:
    road: Road = field(default_factory=Road)
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    sensor: SensorSpec = field(default_factory=SensorSpec)
    weights: EmergenceWeights = field(default_factory=EmergenceWeights)
    observation: ObservationParams = field(default_factory=ObservationParams)
    braking: BrakingConfig = field(default_factory=BrakingConfig)
    thresholds: PolicyThresholds = field(default_factory=PolicyThresholds)
    gains: GainSet = field(default_factory=GainSet)
    baseline_b3: BaselineSpec = field(default_factory=lambda: BaselineSpec("B3"))
    harness: HarnessConfig = field(default_factory=HarnessConfig)

    def validate(self) -> None:
        """Cross-section checks; every section already validated itself."""
        self.gains.validate_stability(self.harness.dt)
        self.braking.comfort_profile()
        self.braking.physical_profile(self.road)
        from .riskzones import compute_risk_zones

        compute_risk_zones(
            self.road.speed_limit,
            self.braking.comfort_profile(),
            self.braking.physical_profile(self.road),
            self.sensor.r_visible,
        )

    def scenario_config(self, seed: int) -> ScenarioConfig:
        return self.scenario.build(seed, self.road, self.harness.dt)


_SECTION_TYPES = {
    "road": Road,
    "scenario": ScenarioSection,
    "sensor": SensorSpec,
    "weights": EmergenceWeights,
    "observation": ObservationParams,
    "braking": BrakingConfig,
    "thresholds": PolicyThresholds,
    "gains": GainSet,
    "baseline_b3": BaselineSpec,
    "harness": HarnessConfig,
}

_TUPLE_FIELDS = {
    "pedestrian_count",
    "parked_car_count",
    "trigger_gap_range",
    "crosswalk_band",
    "w",
    "k_crs",
    "k_yld",
}

_MATRIX_FIELDS = {"q_crs", "r_crs", "q_yld", "r_yld"}


def _build_section(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"section {path!r} must be a mapping")
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(names)
    if unknown:
        raise ConfigError(f"unknown keys in {path!r}: {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if cls is PolicyThresholds and key in ("danger", "discomfort"):
            value = _build_section(ZoneThresholds, value, f"{path}.{key}")
        elif key in _TUPLE_FIELDS and isinstance(value, (list, tuple)):
            value = tuple(value)
        elif key in _MATRIX_FIELDS and isinstance(value, (list, tuple)):
            value = tuple(tuple(row) for row in value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad section {path!r}: {exc}") from exc


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("run configuration must be a mapping")
    unknown = set(data) - set(_SECTION_TYPES)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    sections = {}
    for name, cls in _SECTION_TYPES.items():
        if name in data:
            sections[name] = _build_section(cls, data[name], name)
    cfg = RunConfig(**sections)
    cfg.validate()
    return cfg


def config_to_dict(cfg: RunConfig) -> dict:
    out = {}
    for name in _SECTION_TYPES:
        section = getattr(cfg, name)
        d = dataclasses.asdict(section)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = [list(r) if isinstance(r, tuple) else r for r in v]
        out[name] = d
    return out


def load_config(path: Optional[str | Path]) -> RunConfig:
    """Config from a YAML file; defaults when path is None."""
    if path is None:
        cfg = RunConfig()
        cfg.validate()
        return cfg
    text = Path(path).read_text()
    data = yaml.safe_load(text)
    if data is None:
        data = {}
    return config_from_dict(data)


def save_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(config_to_dict(cfg), sort_keys=True))


def apply_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Flag-level overrides (family, seed, episodes, workers, dt); flags win."""
    scenario = cfg.scenario
    harness = cfg.harness
    if overrides.get("family") is not None:
        family = overrides["family"]
        if family not in FAMILIES:
            raise ConfigError(f"unknown scenario family {family!r}")
        scenario = dataclasses.replace(scenario, family=family)
    if overrides.get("episodes") is not None:
        harness = dataclasses.replace(harness, n_episodes=int(overrides["episodes"]))
    if overrides.get("workers") is not None:
        harness = dataclasses.replace(harness, workers=int(overrides["workers"]))
    if overrides.get("dt") is not None:
        harness = dataclasses.replace(harness, dt=float(overrides["dt"]))
    if overrides.get("seed") is not None:
        harness = dataclasses.replace(harness, master_seed=int(overrides["seed"]))
    cfg = dataclasses.replace(cfg, scenario=scenario, harness=harness)
    cfg.validate()
    return cfg
