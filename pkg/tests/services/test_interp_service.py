import numpy as np
import pytest
from scipy import ndimage

from app.core.exceptions import DimensionError, ParameterError
from app.models.grid import Grid
from app.services.interp_service import (
    cubic_kernel,
    fine_coordinates,
    upsample,
    upsample_bicubic,
    upsample_bilinear,
    upsample_idw,
    upsample_nn,
)


def _affine(nrows, ncols, cell_size):
    rows, cols = np.meshgrid(np.arange(nrows), np.arange(ncols), indexing="ij")
    return Grid.from_array(3.0 + 0.7 * cols * cell_size - 1.3 * rows * cell_size, cell_size=cell_size)


def _keys_oracle(values, factor, a=-0.5):
    n_r, n_c = values.shape
    out = np.zeros((n_r * factor, n_c * factor))
    for i, u in enumerate(fine_coordinates(n_r, factor)):
        for j, v in enumerate(fine_coordinates(n_c, factor)):
            total = 0.0
            for dr in range(-1, 3):
                for dc in range(-1, 3):
                    r, c = int(np.floor(u)) + dr, int(np.floor(v)) + dc
                    w = cubic_kernel(np.array(u - r), a) * cubic_kernel(np.array(v - c), a)
                    total += float(w) * values[min(max(r, 0), n_r - 1), min(max(c, 0), n_c - 1)]
            out[i, j] = total
    return out


def _idw_oracle(values, factor, power, k):
    n_r, n_c = values.shape
    centres = np.array([(r, c) for r in range(n_r) for c in range(n_c)], dtype=float)
    flat = values.ravel()
    out = np.zeros((n_r * factor, n_c * factor))
    for i, u in enumerate(fine_coordinates(n_r, factor)):
        for j, v in enumerate(fine_coordinates(n_c, factor)):
            d = np.hypot(centres[:, 0] - u, centres[:, 1] - v)
            nearest = np.argsort(d, kind="stable")[:k]
            w = d[nearest] ** (-power)
            out[i, j] = (w * flat[nearest]).sum() / w.sum()
    return out


def _seeded_values(seed):
    rng = np.random.default_rng(seed)
    nrows, ncols = rng.integers(4, 8, size=2)
    return Grid.from_array(rng.normal(0.0, 10.0, size=(nrows, ncols)), cell_size=float(rng.choice([0.5, 2.0, 8.0])))

def test_fine_coordinates():
    """Test fine centre positions in coarse index space"""
    assert np.allclose(fine_coordinates(2, 2), [-0.25, 0.25, 0.75, 1.25])

def test_upsample_nn_blocks(random_grid):
    """Test nearest-neighbour replication and geometry"""
    fine = upsample_nn(random_grid, 4)
    assert fine.shape == (48, 40)
    assert fine.cell_size == 0.25
    assert fine.extent == random_grid.extent
    assert np.all(fine.values[4:8, 8:12] == random_grid.values[1, 2])

@pytest.mark.parametrize("seed", range(100))
def test_bilinear_matches_scipy(seed):
    """Test bilinear values against an edge-clamped linear interpolator"""
    g = _seeded_values(seed)
    fine = upsample_bilinear(g, 2)
    rr, cc = np.meshgrid(fine_coordinates(g.nrows, 2), fine_coordinates(g.ncols, 2), indexing="ij")
    expected = ndimage.map_coordinates(g.values, [rr, cc], order=1, mode="nearest")
    assert np.allclose(fine.values, expected, rtol=0, atol=1e-12)

@pytest.mark.parametrize("method", ["bi", "cc"])
def test_affine_surface_reproduced(method):
    """Test that linear and cubic interpolation reproduce a plane away from borders"""
    factor = 4
    coarse = _affine(10, 12, 2.0)
    fine = upsample(coarse, method, factor)
    u, v = np.meshgrid(fine_coordinates(10, factor), fine_coordinates(12, factor), indexing="ij")
    expected = 3.0 + 0.7 * v * 2.0 - 1.3 * u * 2.0
    margin = 2 * factor
    assert np.allclose(
        fine.values[margin:-margin, margin:-margin],
        expected[margin:-margin, margin:-margin],
        atol=1e-9,
    )

@pytest.mark.parametrize("seed", range(100))
def test_bicubic_matches_keys_oracle(seed):
    """Test cubic convolution against an explicit four-tap sum"""
    g = _seeded_values(seed)
    fine = upsample_bicubic(g, 2)
    assert np.allclose(fine.values, _keys_oracle(g.values, 2), rtol=0, atol=1e-12)

def test_bicubic_preserves_constant():
    """Test that cubic weights sum to one"""
    fine = upsample_bicubic(Grid.from_array(np.full((6, 6), 4.5)), 8)
    assert np.allclose(fine.values, 4.5)

@pytest.mark.parametrize("seed", range(100))
def test_idw_matches_oracle(seed):
    """Test IDW against an explicit nearest-k weighting"""
    g = _seeded_values(seed)
    fine = upsample_idw(g, 2, power=2.0, k=4)
    assert np.allclose(fine.values, _idw_oracle(g.values, 2, 2.0, 4), rtol=0, atol=1e-12)

@pytest.mark.parametrize("method", ["nn", "bi", "idw"])
@pytest.mark.parametrize("seed", range(20))
def test_output_stays_within_input_range(method, seed):
    """Test that convex methods never overshoot the coarse extremes"""
    g = _seeded_values(seed)
    fine = upsample(g, method, 4)
    lo, hi = g.values.min(), g.values.max()
    tol = 1e-12 * max(abs(lo), abs(hi))
    assert fine.values.min() >= lo - tol
    assert fine.values.max() <= hi + tol

def test_idw_validation(random_grid):
    """Test IDW parameter checks"""
    with pytest.raises(ParameterError):
        upsample_idw(random_grid, 2, k=0)
    with pytest.raises(ParameterError):
        upsample_idw(random_grid, 2, power=0.0)

def test_small_grids_rejected():
    """Test minimum sizes for bilinear and cubic interpolation"""
    with pytest.raises(DimensionError):
        upsample_bilinear(Grid.from_array(np.zeros((1, 4))), 2)
    with pytest.raises(DimensionError):
        upsample_bicubic(Grid.from_array(np.zeros((3, 8))), 2)

@pytest.mark.parametrize("method", ["bi", "cc", "idw"])
def test_nodata_propagates(method, random_grid):
    """Test that cells touching nodata become nodata"""
    values = random_grid.values.copy()
    values[5, 5] = random_grid.nodata_value
    fine = upsample(random_grid.like(values), method, 2)
    assert np.all(fine.values[10:12, 10:12] == random_grid.nodata_value)
    assert fine.values[0, 0] != random_grid.nodata_value

def test_unknown_method(random_grid):
    """Test dispatch rejection of unknown names"""
    with pytest.raises(ParameterError):
        upsample(random_grid, "lanczos", 2)
