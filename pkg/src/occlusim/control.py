"""Risk-scan FSM driving policy and jerk-limited LQR longitudinal control.

Per tick the controller either handles a concrete conflict or scans for a
latent one:

* if a visible pedestrian is projected to be inside the ego path, the yield
  submachine runs: Emergency when the time-to-collision falls below the
  entry threshold (or, once yielding, below the tighter escalation
  threshold), otherwise Yielding toward a standoff point before the
  pedestrian's crossing line;
* otherwise the look-ahead [0, d_stop_comfort] is scanned at resolution
  delta_d, tracking the running max of the emergence probability separately
  for the danger zone (d <= d_stop_min) and the discomfort zone beyond it.
  Each zone has its own (l_cautious, l_steady) thresholds and limit set; the
  running max selects SteadyDrive above l_steady, CautiousDrive above
  l_cautious, and a later zone's non-normal verdict overrides an earlier
  one (the scan-loop semantics: the last threshold assignment wins).

Tracking is LQR over jerk-augmented state-spaces: cruise state [v, a_prev]
with input scaled by j2, yield state [d, v, a_prev] scaled by j1.  The
feedback jerk is clamped so the realized per-tick |delta a| never exceeds the
active jerk limit, and the acceleration approaches the active band at maximum
allowed jerk when it starts outside it (e.g. right after an emergency stop).
Emergency ramps toward -a_max at the physical ramp jerk a_max / t_ramp_min.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import ConfigError, GainSynthesisError
from .estimator import EmergenceWeights, ObservationParams, emergence_profile
from .riskzones import BrakingProfile, RiskZones, compute_risk_zones
from .visibility import SensorSpec, VisibilityResult
from .world import EGO_LENGTH, EGO_WIDTH, EgoState, Pedestrian, Road, WorldState


class FsmState(str, Enum):
    NORMAL_DRIVE = "normal_drive"
    STEADY_DRIVE = "steady_drive"
    CAUTIOUS_DRIVE = "cautious_drive"
    YIELDING = "yielding"
    EMERGENCY = "emergency"


CRUISE_STATES = (FsmState.NORMAL_DRIVE, FsmState.STEADY_DRIVE, FsmState.CAUTIOUS_DRIVE)

# lateral margin added to the ego half-width for the in-path band
PATH_MARGIN = 0.3


@dataclass(frozen=True)
class ZoneThresholds:
    l_cautious: float
    l_steady: float
    a_limit: float
    j_limit: float

    def __post_init__(self):
        if not (0.0 <= self.l_cautious < self.l_steady <= 1.0):
            raise ConfigError(
                f"zone thresholds need 0 <= l_cautious < l_steady <= 1, got "
                f"({self.l_cautious}, {self.l_steady})"
            )
        if self.a_limit <= 0 or self.j_limit <= 0:
            raise ConfigError("zone a_limit and j_limit must be positive")


@dataclass(frozen=True)
class PolicyThresholds:
    # danger-zone thresholds are stricter (lower) than discomfort-zone ones;
    # l_steady sits just below the saturated-cue observation score so the
    # cautious band covers the typical occluded-cluster risk levels
    danger: ZoneThresholds = ZoneThresholds(0.25, 0.72, 3.5, 0.9)
    discomfort: ZoneThresholds = ZoneThresholds(0.40, 0.70, 2.0, 0.9)
    alpha1: float = 2.0 / 3.0
    alpha2: float = 1.0 / 3.0
    ttc_stop: float = 1.5
    ttc_emergency: float = 1.0
    delta_d: float = 1.0
    yield_standoff: float = 3.0

    def __post_init__(self):
        if not (0.0 < self.alpha2 < self.alpha1 <= 1.0):
            raise ConfigError(f"need 0 < alpha2 < alpha1 <= 1, got ({self.alpha1}, {self.alpha2})")
        if self.ttc_stop <= 0 or self.ttc_emergency <= 0:
            raise ConfigError("TTC thresholds must be positive")
        if self.delta_d <= 0 or self.yield_standoff < 0:
            raise ConfigError("delta_d must be positive and yield_standoff >= 0")


# shipped full-state-feedback gain defaults and the weights they were designed for
DEFAULT_K_CRUISE = (0.9047, 0.9074)
DEFAULT_K_YIELD = (-0.0532, 0.3139, 0.3792)
DEFAULT_Q_CRUISE = ((1000.0, 0.0), (0.0, 1.0))
DEFAULT_R_CRUISE = ((1000.0,),)
DEFAULT_Q_YIELD = ((5.0, 0.0, 0.0), (0.0, 100.0, 0.0), (0.0, 0.0, 0.1))
DEFAULT_R_YIELD = ((1500.0,),)


@dataclass(frozen=True)
class GainSet:
    k_crs: tuple[float, float] = DEFAULT_K_CRUISE
    k_yld: tuple[float, float, float] = DEFAULT_K_YIELD
    q_crs: tuple = DEFAULT_Q_CRUISE
    r_crs: tuple = DEFAULT_R_CRUISE
    q_yld: tuple = DEFAULT_Q_YIELD
    r_yld: tuple = DEFAULT_R_YIELD
    j1: float = 2.0  # max jerk while yielding, m/s^3
    j2: float = 0.9  # max jerk while cruising, m/s^3

    def __post_init__(self):
        if len(self.k_crs) != 2 or len(self.k_yld) != 3:
            raise ConfigError("k_crs must have 2 entries and k_yld 3")
        if self.j1 <= 0 or self.j2 <= 0:
            raise ConfigError("j1 and j2 must be positive")

    def validate_stability(self, dt: float) -> None:
        """Assert both closed loops have spectral radius < 1 at this dt."""
        for rho, mode in zip(self.closed_loop_radii(dt), ("cruise", "yield")):
            if rho >= 1.0:
                raise ConfigError(f"{mode} closed loop unstable at dt={dt}: spectral radius {rho:.4f}")

    def closed_loop_radii(self, dt: float) -> tuple[float, float]:
        a_crs, b_crs, a_yld, b_yld = build_state_spaces(dt, self.j1, self.j2)
        rho_c = float(np.max(np.abs(np.linalg.eigvals(a_crs - b_crs @ np.atleast_2d(self.k_crs)))))
        rho_y = float(np.max(np.abs(np.linalg.eigvals(a_yld - b_yld @ np.atleast_2d(self.k_yld)))))
        return rho_c, rho_y


def build_state_spaces(dt: float, j1: float, j2: float):
    """Jerk-augmented discrete state-spaces.

    Yield: state [d, v, a_prev], d_{k+1} = d_k - dt v_k, input scaled by j1.
    Cruise: state [v, a_prev], input scaled by j2.
    """
    if dt <= 0:
        raise ConfigError("dt must be positive")
    a_yld = np.array([[1.0, -dt, 0.0], [0.0, 1.0, dt], [0.0, 0.0, 1.0]])
    b_yld = np.array([[0.0], [j1 * dt * dt], [j1 * dt]])
    a_crs = np.array([[1.0, dt], [0.0, 1.0]])
    b_crs = np.array([[j2 * dt * dt], [j2 * dt]])
    return a_crs, b_crs, a_yld, b_yld


def synthesize_gains(
    Q: np.ndarray,
    R: np.ndarray,
    A: np.ndarray,
    B: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 500_000,
) -> np.ndarray:
    """Discrete-Riccati fixed point P <- Q + A'PA - A'PB (R + B'PB)^-1 B'PA,
    returning K = (R + B'PB)^-1 B'PA as a 1-D row."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    P = Q.copy()
    residual = math.inf
    for it in range(max_iter):
        btp = B.T @ P
        K = np.linalg.solve(R + btp @ B, btp @ A)
        P_next = Q + A.T @ P @ (A - B @ K)
        P_next = (P_next + P_next.T) / 2.0
        residual = float(np.max(np.abs(P_next - P)))
        P = P_next
        if residual < tol:
            btp = B.T @ P
            return np.linalg.solve(R + btp @ B, btp @ A).ravel()
    raise GainSynthesisError("Riccati iteration did not converge", max_iter, residual)


@dataclass(frozen=True)
class ControlCommand:
    fsm_state: FsmState
    v_ref: float
    a_limit: float
    j_limit: float
    accel_out: float


@dataclass(frozen=True)
class TickDiagnostics:
    """Per-tick policy internals, logged into traces and consumed by tests."""

    target_id: Optional[int]
    ttc: float
    in_path_ids: tuple[int, ...]
    zone: Optional[str]  # zone whose verdict selected the cruise state
    max_risk_danger: Optional[float]
    max_risk_discomfort: Optional[float]
    risk_zones: RiskZones


def path_halfwidth() -> float:
    return EGO_WIDTH / 2.0 + PATH_MARGIN


def pedestrian_in_path(ego: EgoState, ped: Pedestrian, lane_y: float, road_half_width: float) -> bool:
    """True when a pedestrian already on the roadway is on course to be inside
    the ego path: their lateral trajectory at current speed enters the ego
    band before the ego has cleared their longitudinal position."""
    if ped.state != "crossing" or ped.direction == 0:
        return False
    if abs(ped.y) > road_half_width:  # still on the sidewalk / parking strip
        return False
    if ped.x < ego.position - EGO_LENGTH:  # fully passed
        return False
    hw = path_halfwidth()
    progress = ped.direction * (ped.y - lane_y)  # signed lateral progress toward the band
    if progress > hw:  # already exited on the far side
        return False
    t_enter = max(0.0, (-hw - progress) / ped.walking_speed)
    if ego.velocity <= 0.0:
        return True  # a stopped ego never clears; conflict persists
    t_clear = (ped.x - (ego.position - EGO_LENGTH)) / ego.velocity
    return t_enter <= t_clear


def time_to_collision(ego: EgoState, ped: Pedestrian) -> float:
    """Longitudinal gap to the pedestrian's crossing line over ego speed."""
    gap = ped.x - ego.position
    if gap < 0.0 or ego.velocity <= 0.0:
        return math.inf
    return gap / ego.velocity


def _cruise_verdict(max_risk: float, zone: ZoneThresholds) -> Optional[FsmState]:
    if max_risk > zone.l_steady:
        return FsmState.STEADY_DRIVE
    if max_risk > zone.l_cautious:
        return FsmState.CAUTIOUS_DRIVE
    return None


def risk_scan(
    world: WorldState,
    visibility: VisibilityResult,
    zones: RiskZones,
    thresholds: PolicyThresholds,
    weights: EmergenceWeights,
    obs_params: ObservationParams,
):
    """Look-ahead scan: per-zone running maxima and the resulting cruise state."""
    d_max = min(zones.d_stop_comfort, zones.r_visible)
    ds = np.arange(0.0, d_max, thresholds.delta_d)
    if ds.size == 0:
        ds = np.array([0.0])
    probs = emergence_profile(visibility, world, world.ego.position + ds, weights, obs_params)
    danger_mask = ds <= zones.d_stop_min
    max_danger = float(probs[danger_mask].max()) if danger_mask.any() else None
    max_disc = float(probs[~danger_mask].max()) if (~danger_mask).any() else None

    state = FsmState.NORMAL_DRIVE
    zone_name: Optional[str] = None
    if max_danger is not None:
        v = _cruise_verdict(max_danger, thresholds.danger)
        if v is not None:
            state, zone_name = v, "danger"
    if max_disc is not None:
        v = _cruise_verdict(max_disc, thresholds.discomfort)
        if v is not None:
            state, zone_name = v, "discomfort"
    return state, zone_name, max_danger, max_disc


def _jerk_limited(a_prev: float, a_des: float, a_limit: float, j_limit: float, dt: float) -> float:
    """Move from a_prev toward a_des without exceeding the jerk bound; if a_prev
    sits outside the [-a_limit, a_limit] band, approach the band at max jerk."""
    step = j_limit * dt
    lo, hi = a_prev - step, a_prev + step
    a = min(max(a_des, lo), hi)
    if a > a_limit:
        a = max(a_limit, lo)
    elif a < -a_limit:
        a = min(-a_limit, hi)
    return a


def track_cruise(
    velocity: float,
    a_prev: float,
    v_ref: float,
    gains: GainSet,
    dt: float,
    a_limit: float,
    j_limit: float,
) -> float:
    """Cruise-mode acceleration command: feedback jerk u = -K ([v, a] - [v_ref, 0]),
    clamped so the realized jerk j2*u stays within j_limit."""
    err = np.array([velocity - v_ref, a_prev])
    u = float(-np.dot(gains.k_crs, err))
    u = min(max(u, -j_limit / gains.j2), j_limit / gains.j2)
    a_des = a_prev + gains.j2 * dt * u
    return _jerk_limited(a_prev, a_des, a_limit, j_limit, dt)


def track_yield(
    gap: float,
    velocity: float,
    a_prev: float,
    standoff: float,
    gains: GainSet,
    dt: float,
    a_limit: float,
    j_limit: float,
) -> float:
    """Yield-mode acceleration command: LQR over [d, v, a] toward [standoff, 0, 0]."""
    err = np.array([gap - standoff, velocity, a_prev])
    u = float(-np.dot(gains.k_yld, err))
    u = min(max(u, -j_limit / gains.j1), j_limit / gains.j1)
    a_des = a_prev + gains.j1 * dt * u
    return _jerk_limited(a_prev, a_des, a_limit, j_limit, dt)


def track_emergency(a_prev: float, a_max: float, j_physical: float, dt: float) -> float:
    """Ramp toward -a_max at the physical ramp jerk."""
    return _jerk_limited(a_prev, -a_max, a_max, j_physical, dt)


class LongitudinalController:
    """Shared skeleton: yield/emergency submachine plus a cruise-state hook.

    Deterministic state machine over (previous FSM state, previous commanded
    acceleration, inputs); one instance per episode.
    """

    name = "base"

    def __init__(
        self,
        road: Road,
        sensor: SensorSpec,
        thresholds: PolicyThresholds,
        gains: GainSet,
        comfort: BrakingProfile,
        physical: BrakingProfile,
        dt: float,
    ):
        if physical.a_level > road.a_max + 1e-9:
            raise ConfigError("physical braking level exceeds mu*g for this road")
        gains.validate_stability(dt)
        self.road = road
        self.sensor = sensor
        self.thresholds = thresholds
        self.gains = gains
        self.comfort = comfort
        self.physical = physical
        self.dt = dt
        self.state = FsmState.NORMAL_DRIVE
        self.prev_accel = 0.0
        # jerk of the physical braking ramp; finite even for t_ramp = 0
        self.j_physical = physical.a_level / physical.t_ramp if physical.t_ramp > 0 else physical.a_level / dt

    # -- cruise hook -------------------------------------------------------
    def cruise_decision(self, world: WorldState, visibility: VisibilityResult, zones: RiskZones):
        """Return (state, zone_name, max_danger, max_discomfort) while no
        pedestrian needs yielding."""
        raise NotImplementedError

    # -- per-tick action ---------------------------------------------------
    def act(self, world: WorldState, visibility: VisibilityResult) -> tuple[ControlCommand, TickDiagnostics]:
        ego = world.ego
        th = self.thresholds
        zones = compute_risk_zones(ego.velocity, self.comfort, self.physical, self.sensor.r_visible)

        vis_ids = set(visibility.visible_pedestrian_ids)
        lane_y = self.road.ego_lane_y
        half = self.road.half_width
        in_path = tuple(
            p.id
            for p in world.pedestrians
            if p.id in vis_ids and pedestrian_in_path(ego, p, lane_y, half)
        )
        target = None
        if in_path:
            target = min((p for p in world.pedestrians if p.id in in_path), key=lambda p: p.x)

        zone_name = None
        max_danger = None
        max_disc = None
        ttc = math.inf
        if target is not None:
            ttc = time_to_collision(ego, target)
            if self.state in (FsmState.YIELDING, FsmState.EMERGENCY):
                next_state = FsmState.EMERGENCY if ttc < th.ttc_emergency else FsmState.YIELDING
            else:
                next_state = FsmState.EMERGENCY if ttc < th.ttc_stop else FsmState.YIELDING
        else:
            next_state, zone_name, max_danger, max_disc = self.cruise_decision(world, visibility, zones)

        v_limit = self.road.speed_limit
        if next_state is FsmState.EMERGENCY:
            v_ref, a_limit, j_limit = 0.0, self.physical.a_level, self.j_physical
            accel = track_emergency(self.prev_accel, self.physical.a_level, j_limit, self.dt)
        elif next_state is FsmState.YIELDING:
            v_ref, a_limit, j_limit = 0.0, self.physical.a_level, self.gains.j1
            gap = target.x - ego.position
            accel = track_yield(
                gap, ego.velocity, self.prev_accel, th.yield_standoff, self.gains, self.dt, a_limit, j_limit
            )
        else:
            zone_limits = {
                "danger": th.danger,
                "discomfort": th.discomfort,
                None: th.discomfort,
            }[zone_name]
            a_limit, j_limit = zone_limits.a_limit, zone_limits.j_limit
            v_ref = {
                FsmState.NORMAL_DRIVE: v_limit,
                FsmState.STEADY_DRIVE: th.alpha1 * v_limit,
                FsmState.CAUTIOUS_DRIVE: th.alpha2 * v_limit,
            }[next_state]
            accel = track_cruise(ego.velocity, self.prev_accel, v_ref, self.gains, self.dt, a_limit, j_limit)

        accel = min(max(accel, -self.road.a_max), self.road.a_max)
        cmd = ControlCommand(next_state, v_ref, a_limit, j_limit, accel)
        diag = TickDiagnostics(
            target_id=None if target is None else target.id,
            ttc=ttc,
            in_path_ids=in_path,
            zone=zone_name,
            max_risk_danger=max_danger,
            max_risk_discomfort=max_disc,
            risk_zones=zones,
        )
        self.state = next_state
        self.prev_accel = accel
        return cmd, diag


class ProposedController(LongitudinalController):
    """Occlusion-aware controller: emergence-risk scan selects the cruise state."""

    name = "proposed"

    def __init__(
        self,
        road: Road,
        sensor: SensorSpec,
        thresholds: PolicyThresholds,
        gains: GainSet,
        comfort: BrakingProfile,
        physical: BrakingProfile,
        dt: float,
        weights: EmergenceWeights,
        obs_params: ObservationParams = ObservationParams(),
    ):
        super().__init__(road, sensor, thresholds, gains, comfort, physical, dt)
        self.weights = weights
        self.obs_params = obs_params

    def cruise_decision(self, world, visibility, zones):
        return risk_scan(world, visibility, zones, self.thresholds, self.weights, self.obs_params)
