"""Occlusion-unaware baseline controllers B1-B3.

All three share the proposed controller's yield/emergency submachine and LQR
tracking; they differ only in how the cruise state is chosen, and none of
them consumes emergence probabilities (the estimator is not an input).

* B1 cruises at the speed limit.
* B2 cruises at two thirds of the speed limit.
* B3 cruises at one third of the speed limit while it observes a crosswalk
  closer than ``crosswalk_slow_distance`` ahead, otherwise at the limit.
"""

from __future__ import annotations

from dataclasses import dataclass

from .control import FsmState, GainSet, LongitudinalController, PolicyThresholds
from .errors import ConfigError
from .riskzones import BrakingProfile
from .visibility import SensorSpec, VisibilityResult
from .world import Road, WorldState

BASELINE_IDS = ("B1", "B2", "B3")


@dataclass(frozen=True)
class BaselineSpec:
    id: str
    crosswalk_slow_distance: float = 20.0  # B3 only

    def __post_init__(self):
        if self.id not in BASELINE_IDS:
            raise ConfigError(f"unknown baseline {self.id!r}")
        if self.crosswalk_slow_distance <= 0:
            raise ConfigError("crosswalk_slow_distance must be positive")


class BaselineController(LongitudinalController):
    """Fixed cruise-speed policy on top of the shared yield/emergency machine."""

    def __init__(
        self,
        spec: BaselineSpec,
        road: Road,
        sensor: SensorSpec,
        thresholds: PolicyThresholds,
        gains: GainSet,
        comfort: BrakingProfile,
        physical: BrakingProfile,
        dt: float,
    ):
        super().__init__(road, sensor, thresholds, gains, comfort, physical, dt)
        self.spec = spec
        self.name = spec.id

    def cruise_decision(self, world: WorldState, visibility: VisibilityResult, zones):
        if self.spec.id == "B1":
            return FsmState.NORMAL_DRIVE, None, None, None
        if self.spec.id == "B2":
            return FsmState.STEADY_DRIVE, None, None, None
        # B3: slow down only while an observed crosswalk is close ahead
        road = world.road
        far_edge = road.crosswalk_position + road.crosswalk_width / 2.0
        gap = far_edge - world.ego.position
        if visibility.crosswalk_visible and 0.0 <= gap <= self.spec.crosswalk_slow_distance:
            return FsmState.CAUTIOUS_DRIVE, None, None, None
        return FsmState.NORMAL_DRIVE, None, None, None
