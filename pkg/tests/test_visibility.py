import math

import numpy as np
import pytest
from shapely.geometry import Point, Polygon

from occlusim.visibility import SensorSpec, compute_visibility
from occlusim.world import EgoState, ParkedCar, Pedestrian, Road, WorldState

from .conftest import random_small_world
from .oracles import ray_cast_visible


def make_world(peds=(), cars=(), ego_x=10.0, road=None) -> WorldState:
    return WorldState(
        road=road or Road(),
        parked_cars=tuple(cars),
        pedestrians=tuple(peds),
        ego=EgoState(position=ego_x, velocity=5.0),
    )


def ped_at(pid, x, y):
    return Pedestrian(id=pid, x=x, y=y, walking_speed=1.0, will_cross=False, direction=0)


def test_no_occluders_wedge_visibility():
    road = Road()
    sensor = SensorSpec()
    lane = road.ego_lane_y
    in_range = ped_at(0, 30.0, lane + 3.0)
    out_of_range = ped_at(1, 10.0 + sensor.r_visible + 1.0, lane)
    behind = ped_at(2, 5.0, lane)
    w = make_world(peds=[in_range, out_of_range, behind], ego_x=10.0)
    vis = compute_visibility(w, sensor)
    assert vis.visible_pedestrian_ids == (0,)
    # polygon equals the FOV wedge clipped to the range disc (up to arc sampling)
    poly = Polygon(vis.polygon)
    expected_area = 0.5 * sensor.r_visible**2 * (2 * sensor.fov_half_angle)
    assert poly.area == pytest.approx(expected_area, rel=2e-3)


def test_straight_line_blocking():
    road = Road()
    # car on the right strip between ego and a pedestrian on the right sidewalk
    car = ParkedCar(longitudinal_position=20.0, length=4.5, width=1.8, side="right", lateral_offset=0.1)
    cx = 22.25
    # place the pedestrian radially behind the car center as seen from the sensor
    sensor_origin = (10.0, road.ego_lane_y)
    car_c = (cx, -(road.half_width + 0.1 + 0.9))
    direction = np.array(car_c) - np.array(sensor_origin)
    target = np.array(car_c) + direction / np.linalg.norm(direction) * 1.5
    blocked = ped_at(0, float(target[0]), float(target[1]))
    w = make_world(peds=[blocked], cars=[car], ego_x=10.0)
    vis = compute_visibility(w, SensorSpec())
    assert vis.visible_pedestrian_ids == ()
    assert 0 in vis.visible_parked_car_indices  # the occluder itself is seen


def test_oracle_equivalence_random_worlds(rng):
    for _ in range(120):
        w = random_small_world(rng)
        sensor = SensorSpec()
        vis = compute_visibility(w, sensor)
        peds, cars, cw = ray_cast_visible(w, sensor)
        assert set(vis.visible_pedestrian_ids) == peds
        assert set(vis.visible_parked_car_indices) == cars
        assert vis.crosswalk_visible == cw


def test_monotone_in_range(rng):
    for _ in range(40):
        w = random_small_world(rng)
        small = compute_visibility(w, SensorSpec(r_visible=25.0))
        large = compute_visibility(w, SensorSpec(r_visible=40.0))
        assert set(small.visible_pedestrian_ids) <= set(large.visible_pedestrian_ids)
        assert set(small.visible_parked_car_indices) <= set(large.visible_parked_car_indices)


def test_occluded_intervals_disjoint_sorted_and_consistent(rng):
    sensor = SensorSpec()
    for _ in range(40):
        w = random_small_world(rng)
        vis = compute_visibility(w, sensor)
        by_side = {"left": [], "right": []}
        for side, lo, hi in vis.occluded_sidewalk_intervals:
            assert hi > lo
            by_side[side].append((lo, hi))
        for side, spans in by_side.items():
            assert spans == sorted(spans)
            for (a0, a1), (b0, b1) in zip(spans, spans[1:]):
                assert a1 <= b0 + 1e-9
        # self-consistency: points inside occluded spans are not visible
        for side, lo, hi in vis.occluded_sidewalk_intervals:
            y = w.road.sidewalk_y if side == "left" else -w.road.sidewalk_y
            for x in (lo + 1e-6, (lo + hi) / 2.0, hi - 1e-6):
                if lo + 1e-6 <= x <= hi - 1e-6:
                    assert not vis.is_visible_point(x, y)


def test_visible_pedestrians_inside_polygon(rng):
    sensor = SensorSpec()
    for _ in range(30):
        w = random_small_world(rng)
        vis = compute_visibility(w, sensor)
        poly = Polygon(vis.polygon)
        assert poly.is_simple
        for p in w.pedestrians:
            inside = poly.buffer(5e-3).contains(Point(p.x, p.y))
            if p.id in vis.visible_pedestrian_ids:
                assert inside
            elif poly.buffer(-5e-3).contains(Point(p.x, p.y)):
                pytest.fail("pedestrian strictly inside polygon but not in visible set")


def test_polygon_star_shaped_about_origin(rng):
    sensor = SensorSpec()
    for _ in range(20):
        w = random_small_world(rng)
        vis = compute_visibility(w, sensor)
        ox, oy = vis.origin
        angles = [math.atan2(y - oy, x - ox) for x, y in vis.polygon[1:]]
        assert all(b - a >= -1e-12 for a, b in zip(angles, angles[1:]))


def test_grazing_corner_resolves_visible():
    road = Road()
    car = ParkedCar(longitudinal_position=20.0, length=4.5, width=1.8, side="right", lateral_offset=0.1)
    x0, y0, x1, y1 = car.rect(road)
    origin = (10.0, road.ego_lane_y)
    # a point exactly on the ray grazing the far roadside corner, beyond it
    corner = np.array([x1, y1])
    d = corner - np.array(origin)
    target = corner + d / np.linalg.norm(d) * 2.0
    w = make_world(peds=[ped_at(0, float(target[0]), float(target[1]))], cars=[car], ego_x=10.0)
    vis = compute_visibility(w, SensorSpec())
    assert vis.visible_pedestrian_ids == (0,)


def test_pedestrian_occluder_flag():
    road = Road()
    lane = road.ego_lane_y
    crossing = Pedestrian(
        id=0, x=20.0, y=lane, walking_speed=1.0, will_cross=True, state="crossing", direction=1
    )
    hidden = ped_at(1, 21.5, lane)  # directly behind the crossing pedestrian
    w = make_world(peds=[crossing, hidden], ego_x=10.0)
    assert compute_visibility(w, SensorSpec()).visible_pedestrian_ids == (0, 1)
    vis = compute_visibility(w, SensorSpec(pedestrians_occlude=True))
    assert vis.visible_pedestrian_ids == (0,)
