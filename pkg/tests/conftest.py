import numpy as np
import pytest

from occlusim.config import RunConfig, load_config


@pytest.fixture(scope="session")
def cfg() -> RunConfig:
    return load_config(None)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(20240817))


def random_small_world(rng, n_cars=None, n_peds=None):
    """A compact random world for geometric tests (<= 6 occluders by default)."""
    from occlusim.world import generate_scenario, scenario_config

    n_cars = int(rng.integers(0, 7)) if n_cars is None else n_cars
    n_peds = int(rng.integers(1, 7)) if n_peds is None else n_peds
    seed = int(rng.integers(0, 2**63 - 1))
    cfg = scenario_config(
        "sc2",
        seed,
        pedestrian_count=(n_peds, n_peds),
        parked_car_count=(n_cars, n_cars),
    )
    world = generate_scenario(cfg)
    # scatter the ego somewhere along the road so geometry varies
    from dataclasses import replace

    x = float(rng.uniform(0.0, world.road.length))
    v = float(rng.uniform(0.0, world.road.speed_limit))
    return replace(world, ego=replace(world.ego, position=x, velocity=v))
