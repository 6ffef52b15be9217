"""Occlusion-aware pedestrian-emergence risk assessment and longitudinal control.

A deterministic, seedable simulator of a straight urban road with parked-car
occlusions and crossing pedestrians, an emergence-probability estimator over
visible context, risk-zone assessment, an FSM driving policy with jerk-limited
LQR tracking, three occlusion-unaware baselines, and a paired-seed batch
harness with mt1-mt4 metrics.
"""

from .baselines import BaselineController, BaselineSpec
from .config import RunConfig, load_config, save_config
from .control import (
    ControlCommand,
    FsmState,
    GainSet,
    LongitudinalController,
    PolicyThresholds,
    ProposedController,
    ZoneThresholds,
    build_state_spaces,
    synthesize_gains,
    time_to_collision,
)
from .errors import ConfigError, GainSynthesisError
from .estimator import (
    EmergenceWeights,
    Observation,
    ObservationParams,
    build_observation,
    emergence_probability,
)
from .harness import BatchSummary, EpisodeRecord, run_batch, run_episode
from .riskzones import BrakingProfile, RiskZones, compute_risk_zones, stopping_distance
from .visibility import SensorSpec, VisibilityResult, compute_visibility
from .world import (
    EgoState,
    ParkedCar,
    Pedestrian,
    Road,
    ScenarioConfig,
    WorldState,
    detect_collision,
    generate_scenario,
    scenario_config,
    step_world,
)

__version__ = "0.1.0"
