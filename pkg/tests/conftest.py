import numpy as np
import pytest

from app.models.grid import Grid
from app.schemas.synth import SynthConfig
from app.services.network_service import init_model
from app.services.synth_service import generate_scene


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def ramp_grid() -> Grid:
    """8x8 planar surface, 2 m cells, lower-left at (100, 200)"""
    rows, cols = np.mgrid[0:8, 0:8]
    return Grid.from_array(10.0 + 2.0 * cols - 0.5 * rows, cell_size=2.0, xll=100.0, yll=200.0)


@pytest.fixture
def random_grid(rng) -> Grid:
    return Grid.from_array(rng.normal(50.0, 5.0, size=(12, 10)), cell_size=1.0, xll=10.0, yll=20.0)


@pytest.fixture
def tiny_model(rng):
    """Two-stage, four-feature network with random weights"""
    return init_model(2, split=2, features=4, rng=rng)


@pytest.fixture
def zero_model():
    """Four-stage network whose residual paths are all zero"""
    return init_model(4, split=2, features=4, rng=None)


@pytest.fixture(scope="session")
def small_scene():
    cfg = SynthConfig(size=96, cell_size=0.5, seed=7, road_spacing=20.0, road_width=4.0, building_density=0.2,
                      footprint_range=(4.0, 8.0))
    return generate_scene(cfg)
