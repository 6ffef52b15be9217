import math
from dataclasses import replace

import numpy as np
import pytest
import scipy.linalg

from occlusim.config import RunConfig
from occlusim.control import (
    DEFAULT_K_CRUISE,
    DEFAULT_K_YIELD,
    FsmState,
    GainSet,
    PolicyThresholds,
    ZoneThresholds,
    build_state_spaces,
    pedestrian_in_path,
    risk_scan,
    synthesize_gains,
    time_to_collision,
    track_cruise,
    track_emergency,
    track_yield,
)
from occlusim.errors import ConfigError, GainSynthesisError
from occlusim.estimator import EmergenceWeights, ObservationParams
from occlusim.harness import make_controller
from occlusim.riskzones import compute_risk_zones
from occlusim.visibility import compute_visibility
from occlusim.world import EgoState, Pedestrian, Road, WorldState

from .conftest import random_small_world
from .oracles import reference_risk_scan, value_iteration_gain


def make_world(peds=(), cars=(), ego=None, road=None) -> WorldState:
    return WorldState(
        road=road or Road(crosswalk_position=90.0),
        parked_cars=tuple(cars),
        pedestrians=tuple(peds),
        ego=ego or EgoState(velocity=30.0 / 3.6),
    )


# --- state spaces and gain synthesis ---------------------------------------

def test_state_space_matrices():
    a_crs, b_crs, a_yld, b_yld = build_state_spaces(0.1, j1=2.0, j2=0.9)
    assert np.allclose(b_yld.ravel(), [0.0, 0.02, 0.2])
    assert np.allclose(b_crs.ravel(), [0.009, 0.09])
    assert np.allclose(a_yld, [[1, -0.1, 0], [0, 1, 0.1], [0, 0, 1]])
    assert np.allclose(a_crs, [[1, 0.1], [0, 1]])
    # the yield plant is upper triangular with a unit diagonal
    eig = np.linalg.eigvals(a_yld)
    assert np.allclose(eig, 1.0)


def test_synthesize_scalar_no_feedback_needed():
    K = synthesize_gains(Q=[[1.0]], R=[[1.0]], A=[[0.0]], B=[[1.0]])
    assert K.shape == (1,)
    assert K[0] == pytest.approx(0.0, abs=1e-12)


def test_synthesize_matches_scipy_dare(rng):
    for _ in range(5):
        n = int(rng.integers(1, 5))
        A = rng.normal(size=(n, n))
        A *= 0.9 / max(1e-9, np.max(np.abs(np.linalg.eigvals(A))))
        B = rng.normal(size=(n, 1))
        M = rng.normal(size=(n, n))
        Q = M.T @ M + 0.1 * np.eye(n)
        R = np.array([[1.0 + float(rng.random())]])
        K = synthesize_gains(Q, R, A, B)
        P = scipy.linalg.solve_discrete_are(A, B, Q, R)
        K_ref = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A).ravel()
        assert np.max(np.abs(K - K_ref)) < 1e-8


def test_synthesize_nonconvergence_diagnostics():
    # unstable, uncontrollable pair cannot converge
    with pytest.raises(GainSynthesisError) as exc:
        synthesize_gains(Q=[[1.0]], R=[[1.0]], A=[[2.0]], B=[[0.0]], max_iter=50)
    assert exc.value.iterations == 50
    assert math.isfinite(exc.value.residual)


def test_default_gains_verbatim_and_stable():
    g = GainSet()
    assert g.k_crs == (0.9047, 0.9074)
    assert g.k_yld == (-0.0532, 0.3139, 0.3792)
    rho_c, rho_y = g.closed_loop_radii(0.1)
    assert rho_c == pytest.approx(0.9583, abs=5e-4)
    assert rho_y == pytest.approx(0.9792, abs=5e-4)
    g.validate_stability(0.1)


def test_synthesized_gains_are_stabilizing():
    a_crs, b_crs, a_yld, b_yld = build_state_spaces(0.1, 2.0, 0.9)
    k_crs = synthesize_gains([[1000.0, 0.0], [0.0, 1.0]], [[1000.0]], a_crs, b_crs)
    k_yld = synthesize_gains(
        [[5.0, 0, 0], [0, 100.0, 0], [0, 0, 0.1]], [[1500.0]], a_yld, b_yld
    )
    g = GainSet(k_crs=tuple(k_crs), k_yld=tuple(k_yld))
    g.validate_stability(0.1)


def test_synthesize_equals_value_iteration_oracle(rng):
    a_crs, b_crs, a_yld, b_yld = build_state_spaces(0.1, 2.0, 0.9)
    K = synthesize_gains([[1000.0, 0.0], [0.0, 1.0]], [[1000.0]], a_crs, b_crs)
    K_vi = value_iteration_gain(a_crs, b_crs, [[1000.0, 0.0], [0.0, 1.0]], [[1000.0]])
    assert np.max(np.abs(K - K_vi)) < 1e-8


# --- tracking ---------------------------------------------------------------

def test_track_zero_error_keeps_zero_and_decays():
    g = GainSet()
    assert track_cruise(8.0, 0.0, 8.0, g, 0.1, 2.0, 0.9) == pytest.approx(0.0)
    a1 = track_cruise(8.0, 1.0, 8.0, g, 0.1, 2.0, 0.9)
    assert 0.0 < a1 < 1.0  # acceleration decays toward 0 through the closed loop


def test_track_cruise_positive_step_bounded_by_jerk():
    g = GainSet()
    out = track_cruise(5.0, 0.0, 30.0 / 3.6, g, 0.1, 2.0, 0.9)
    # hand evaluation: u = -(0.9047 (5 - 8.333)) = +3.01, clamped to 1 -> j2 dt
    assert out == pytest.approx(0.9 * 0.1, abs=1e-12)
    assert out > 0.0


def test_track_step_response_converges():
    g = GainSet()
    dt, v_ref = 0.1, 30.0 / 3.6
    v, a = 0.0, 0.0
    for k in range(600):
        a = track_cruise(v, a, v_ref, g, dt, 2.0, 0.9)
        v = max(0.0, v + dt * a)
        if abs(v - v_ref) < 0.1:
            break
    assert abs(v - v_ref) < 0.1


def test_track_yield_converges_to_standoff():
    g = GainSet()
    dt = 0.1
    x, v, a = 0.0, 8.0, 0.0
    line = 40.0
    for _ in range(1500):
        a = track_yield(line - x, v, a, 3.0, g, dt, 7.8, 2.0)
        x += dt * v
        v = max(0.0, v + dt * a)
    assert v < 0.05
    assert line - x > 0.5  # stopped before the crossing line


def test_jerk_limited_band_approach_after_emergency():
    # acceleration outside the new band approaches it at max jerk
    g = GainSet()
    a_prev = -7.8
    out = track_cruise(0.0, a_prev, 8.0, g, 0.1, 2.0, 0.9)
    assert out == pytest.approx(a_prev + 0.9 * 0.1)


def test_track_emergency_ramps_to_max_braking():
    a = 0.5
    j_phys = 7.848 / 0.3
    seen = []
    for _ in range(40):
        a_new = track_emergency(a, 7.848, j_phys, 0.1)
        assert abs(a_new - a) <= j_phys * 0.1 + 1e-9
        a = a_new
        seen.append(a)
    assert a == pytest.approx(-7.848)


# --- TTC and the in-path predicate -----------------------------------------

def crossing_ped(pid=0, x=30.0, y=None, speed=1.5, direction=1, road=None):
    road = road or Road()
    y = road.ego_lane_y - 1.4 if y is None else y
    return Pedestrian(
        id=pid, x=x, y=y, walking_speed=speed, will_cross=True, state="crossing", direction=direction
    )


def test_ttc_examples():
    ego = EgoState(position=20.0, velocity=5.0)
    assert time_to_collision(ego, crossing_ped(x=30.0)) == pytest.approx(2.0)
    assert time_to_collision(EgoState(position=20.0, velocity=0.0), crossing_ped(x=30.0)) == math.inf
    assert time_to_collision(ego, crossing_ped(x=10.0)) == math.inf  # behind


def test_in_path_cases():
    road = Road()
    lane, half = road.ego_lane_y, road.half_width
    ego = EgoState(position=20.0, velocity=8.0)
    waiting = replace(crossing_ped(x=30.0), state="waiting")
    assert not pedestrian_in_path(ego, waiting, lane, half)
    on_sidewalk = crossing_ped(x=30.0, y=-road.sidewalk_y + 0.1)
    assert not pedestrian_in_path(ego, on_sidewalk, lane, half)
    approaching = crossing_ped(x=30.0, y=lane - 1.4)
    assert pedestrian_in_path(ego, approaching, lane, half)
    exited = crossing_ped(x=30.0, y=lane + 1.5)
    assert not pedestrian_in_path(ego, exited, lane, half)
    passed = crossing_ped(x=10.0, y=lane - 1.4)
    assert not pedestrian_in_path(ego, passed, lane, half)
    # ego clears the crossing point long before the pedestrian arrives
    slow_far = crossing_ped(x=24.0, y=-half + 0.05, speed=0.2)
    assert not pedestrian_in_path(ego, slow_far, lane, half)
    # but a stopped ego never clears
    assert pedestrian_in_path(EgoState(position=20.0, velocity=0.0), slow_far, lane, half)


# --- the policy -------------------------------------------------------------

def controller_for(world, cfg=None, **over):
    cfg = cfg or RunConfig()
    cfg = replace(cfg, road=world.road, **over)
    return make_controller("proposed", cfg), cfg


def test_forced_cautious_drive_between_thresholds():
    # probability 0.5 everywhere, l_cautious = 0.4 < 0.5 <= l_steady = 0.6
    world = make_world()
    thresholds = PolicyThresholds(
        danger=ZoneThresholds(0.4, 0.6, 3.5, 0.9),
        discomfort=ZoneThresholds(0.4, 0.6, 2.0, 0.9),
    )
    ctrl, cfg = controller_for(world, weights=EmergenceWeights((0.0,) * 6), thresholds=thresholds)
    cmd, diag = ctrl.act(world, compute_visibility(world, cfg.sensor))
    assert cmd.fsm_state is FsmState.CAUTIOUS_DRIVE
    assert cmd.v_ref == pytest.approx(cfg.thresholds.alpha2 * world.road.speed_limit)


def test_normal_drive_when_risk_low():
    world = make_world()  # empty world, default weights -> p ~ 0.047 everywhere
    ctrl, cfg = controller_for(world)
    cmd, diag = ctrl.act(world, compute_visibility(world, cfg.sensor))
    assert cmd.fsm_state is FsmState.NORMAL_DRIVE
    assert cmd.v_ref == pytest.approx(world.road.speed_limit)
    assert diag.max_risk_danger is not None and diag.max_risk_danger < cfg.thresholds.danger.l_cautious


def test_emergency_when_ttc_below_stop_threshold():
    road = Road(crosswalk_position=90.0)
    ped = crossing_ped(x=24.0, road=road)  # 4 m gap at 8.33 m/s -> TTC 0.48 s
    world = make_world(peds=[ped], ego=EgoState(position=20.0, velocity=30.0 / 3.6), road=road)
    ctrl, cfg = controller_for(world)
    cmd, diag = ctrl.act(world, compute_visibility(world, cfg.sensor))
    assert diag.target_id == 0 and diag.ttc == pytest.approx(0.48, abs=1e-9)
    assert cmd.fsm_state is FsmState.EMERGENCY


def test_yielding_when_ttc_above_stop_threshold():
    road = Road(crosswalk_position=90.0)
    ped = crossing_ped(x=40.0, road=road)  # 20 m gap -> TTC 2.4 s
    world = make_world(peds=[ped], ego=EgoState(position=20.0, velocity=30.0 / 3.6), road=road)
    ctrl, cfg = controller_for(world)
    cmd, diag = ctrl.act(world, compute_visibility(world, cfg.sensor))
    assert cmd.fsm_state is FsmState.YIELDING
    assert cmd.accel_out < 0.0  # braking toward the standoff
    assert cmd.j_limit == pytest.approx(cfg.gains.j1)


def test_emergency_dominance_ramp():
    road = Road(crosswalk_position=90.0)
    world = make_world(
        peds=[crossing_ped(x=24.0, road=road)],
        ego=EgoState(position=20.0, velocity=30.0 / 3.6),
        road=road,
    )
    ctrl, cfg = controller_for(world)
    a_prev = 0.0
    for _ in range(25):
        cmd, diag = ctrl.act(world, compute_visibility(world, cfg.sensor))
        assert cmd.fsm_state is FsmState.EMERGENCY
        assert cmd.accel_out <= a_prev + 1e-12  # monotone ramp down
        a_prev = cmd.accel_out
    assert a_prev == pytest.approx(-world.road.a_max, abs=1e-9)


def test_scan_differential_against_reference(rng, cfg):
    params = ObservationParams()
    weights = EmergenceWeights()
    comfort = cfg.braking.comfort_profile()
    for _ in range(30):
        world = random_small_world(rng)
        physical = cfg.braking.physical_profile(world.road)
        vis = compute_visibility(world, cfg.sensor)
        zones = compute_risk_zones(world.ego.velocity, comfort, physical, cfg.sensor.r_visible)
        got = risk_scan(world, vis, zones, cfg.thresholds, weights, params)
        want = reference_risk_scan(world, vis, zones, cfg.thresholds, weights, params)
        assert got[0] is want[0]
        assert got[1] == want[1]
        for g, w in zip(got[2:], want[2:]):
            if w is None:
                assert g is None
            else:
                assert g == pytest.approx(w, abs=1e-12)


def test_threshold_validation():
    with pytest.raises(ConfigError):
        ZoneThresholds(0.6, 0.5, 2.0, 0.9)  # l_cautious >= l_steady
    with pytest.raises(ConfigError):
        PolicyThresholds(alpha1=0.5, alpha2=0.6)  # alpha2 >= alpha1
    with pytest.raises(ConfigError):
        GainSet(j1=-1.0)
