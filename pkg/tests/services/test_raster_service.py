import numpy as np
import pytest

from app.core.exceptions import CoverageError, DimensionError, GridParseError, ParameterError
from app.models.grid import Grid, Tile
from app.services.interp_service import upsample_nn
from app.services.raster_service import (
    check_factor,
    compute_slope,
    downsample_nn,
    load_grid,
    read_ascii_grid,
    save_grid,
    split_into_tiles,
    stitch_tiles,
    subgrid,
    tile_offsets,
    write_ascii_grid,
)

HEADER = "NCOLS 3\nNROWS 2\nXLLCORNER 10\nYLLCORNER 20\nCELLSIZE 0.5\nNODATA_VALUE -9999\n"


def _seeded_grid(seed, min_size=1, max_size=12):
    rng = np.random.default_rng(seed)
    nrows, ncols = rng.integers(min_size, max_size + 1, size=2)
    values = rng.normal(40.0, 15.0, size=(nrows, ncols)) * 10.0 ** rng.integers(-3, 4)
    values[rng.random((nrows, ncols)) < 0.1] = -9999.0
    return Grid.from_array(
        values,
        cell_size=float(rng.choice([0.5, 1.0, 2.0, 0.1, 30.0])),
        xll=float(rng.uniform(-1e5, 1e5)),
        yll=float(rng.uniform(-1e5, 1e5)),
    )


def test_read_ascii_grid():
    """Test parsing a small grid"""
    g = read_ascii_grid(HEADER + "1 2 3\n4 5 -9999\n")
    assert g.shape == (2, 3)
    assert g.cell_size == 0.5
    assert (g.xll, g.yll) == (10.0, 20.0)
    assert g.values[1, 2] == -9999.0
    assert g.has_nodata()

def test_read_ascii_grid_case_insensitive_header():
    """Test that header keywords ignore case and nodata defaults"""
    text = "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n7 8\n"
    g = read_ascii_grid(text)
    assert g.values.tolist() == [[7.0, 8.0]]
    assert g.nodata_value == -9999.0

@pytest.mark.parametrize(
    "text,line",
    [
        (HEADER + "1 2 3\n4 x 6\n", 8),
        (HEADER + "1 2 3\n4 5\n", 8),
        (HEADER + "1 2 3\n4 5 6\n7 8 9\n", 9),
        ("NCOLS 3\nNROWS 2\nXLLCORNER 0\nCELLSIZE 1\n1 2 3\n", 5),
        ("NCOLS 3\nNCOLS 3\n", 2),
    ],
)
def test_read_ascii_grid_reports_line(text, line):
    """Test that parse errors carry the offending line number"""
    with pytest.raises(GridParseError) as exc:
        read_ascii_grid(text)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)

@pytest.mark.parametrize(
    "text,line",
    [
        (HEADER + "1 2 3\n", 7),
        (HEADER + "1 2 3\n\n", 8),
        (HEADER, 6),
        ("", 1),
        (HEADER.replace("CELLSIZE 0.5", "CELLSIZE -1") + "1 2 3\n4 5 6\n", 5),
        (HEADER + "1 2 3\n4 nan 6\n", 8),
    ],
)
def test_read_ascii_grid_trailing_errors_report_line(text, line):
    """Test that short, empty and invalid grids still name a line"""
    with pytest.raises(GridParseError) as exc:
        read_ascii_grid(text)
    assert exc.value.line == line

def test_ascii_round_trip(random_grid, tmp_path):
    """Test that writing and reading preserves every value exactly"""
    path = tmp_path / "dem.asc"
    save_grid(random_grid, path)
    assert load_grid(path) == random_grid

@pytest.mark.parametrize("seed", range(100))
def test_ascii_text_round_trip_random_grids(seed):
    """Test lossless text round trips over random shapes, scales and nodata"""
    g = _seeded_grid(seed)
    assert read_ascii_grid(write_ascii_grid(g)) == g

def test_write_integer_grid():
    """Test integer output for class rasters"""
    g = Grid.from_array(np.array([[1.0, 2.0], [3.0, 1.0]]))
    text = write_ascii_grid(g, integer=True)
    assert text.splitlines()[-2:] == ["1 2", "3 1"]

@pytest.mark.parametrize("factor", [0, 1, 3, 6, 2.5, True])
def test_check_factor_rejects(factor):
    """Test that factors must be powers of two above one"""
    with pytest.raises(ParameterError):
        check_factor(factor)

def test_downsample_picks_centre_offset(ramp_grid):
    """Test nearest-neighbour decimation geometry"""
    coarse = downsample_nn(ramp_grid, 4)
    assert coarse.shape == (2, 2)
    assert coarse.cell_size == 8.0
    assert (coarse.xll, coarse.yll) == (ramp_grid.xll, ramp_grid.yll)
    assert coarse.values[0, 0] == ramp_grid.values[2, 2]
    assert coarse.values[1, 1] == ramp_grid.values[6, 6]
    assert coarse.extent == ramp_grid.extent

def test_downsample_requires_divisible(random_grid):
    """Test that the factor must divide both dimensions"""
    with pytest.raises(DimensionError):
        downsample_nn(random_grid, 4)

def test_slope_of_plane(ramp_grid):
    """Test Horn slope on an inclined plane"""
    slope = compute_slope(ramp_grid)
    expected = 100.0 * np.hypot(1.0, 0.25)
    assert np.allclose(slope.values[1:-1, 1:-1], expected)

def test_slope_nodata_spreads(ramp_grid):
    """Test that nodata makes its 3x3 neighbourhood nodata"""
    values = ramp_grid.values.copy()
    values[4, 4] = ramp_grid.nodata_value
    slope = compute_slope(ramp_grid.like(values))
    assert np.all(slope.values[3:6, 3:6] == ramp_grid.nodata_value)
    assert slope.values[1, 1] != ramp_grid.nodata_value

@pytest.mark.parametrize("shift", [1024.0, -512.0, 0.125])
def test_slope_ignores_constant_offset(shift):
    """Test that adding a constant leaves slope unchanged"""
    rng = np.random.default_rng(5)
    # dyadic values keep every stencil sum exact
    values = np.round(rng.normal(50.0, 5.0, size=(9, 11)) * 1024.0) / 1024.0
    g = Grid.from_array(values, cell_size=0.5)
    base = compute_slope(g)
    moved = compute_slope(g.like(values + shift))
    assert np.allclose(moved.values, base.values, rtol=0, atol=1e-12)

@pytest.mark.parametrize("factor", [2, 4, 8, 16])
@pytest.mark.parametrize("seed", range(5))
def test_downsample_undoes_upsample(factor, seed):
    """Test that decimating a replicated grid returns the original"""
    g = _seeded_grid(seed)
    restored = downsample_nn(upsample_nn(g, factor), factor)
    assert restored == g

def test_slope_needs_three_cells():
    """Test that tiny grids are rejected"""
    with pytest.raises(DimensionError):
        compute_slope(Grid.from_array(np.zeros((2, 5))))

def test_subgrid_keeps_world_position(ramp_grid):
    """Test window georeferencing"""
    window = subgrid(ramp_grid, 2, 3, 4, 2)
    assert window.xll == ramp_grid.xll + 3 * 2.0
    assert window.yll == ramp_grid.yll + 2 * 2.0
    assert window.cell_center(0, 0) == ramp_grid.cell_center(2, 3)

def test_tile_offsets():
    """Test tile start positions with the last tile clamped"""
    assert tile_offsets(10, 4, 2) == [0, 2, 4, 6]
    assert tile_offsets(4, 4, 0) == [0]
    assert tile_offsets(9, 4, 0) == [0, 4, 5]

def test_split_rejects_bad_overlap(ramp_grid):
    """Test block and overlap validation"""
    with pytest.raises(ParameterError):
        split_into_tiles(ramp_grid, 4, 4)
    with pytest.raises(ParameterError):
        split_into_tiles(ramp_grid, 9, 0)

def test_split_and_stitch_restores_grid(random_grid):
    """Test that stitching unmodified tiles gives back the grid"""
    tiles = split_into_tiles(random_grid, 5, 2)
    assert stitch_tiles(tiles, random_grid.shape) == random_grid

def test_stitch_prefers_nearest_centre():
    """Test ownership of overlapping cells"""
    left = Tile(0, 0, Grid.from_array(np.zeros((4, 4))))
    right = Tile(0, 2, Grid.from_array(np.ones((4, 4)), xll=2.0))
    out = stitch_tiles([right, left], (4, 6))
    assert out.values[0].tolist() == [0, 0, 0, 1, 1, 1]

def test_stitch_ownership_in_two_dimensions():
    """Test that every cell goes to the tile nearest along each axis"""
    g = Grid.from_array(np.zeros((12, 12)))
    tiles = split_into_tiles(g, 6, 3)
    labelled = [Tile(t.row_off, t.col_off, t.grid.like(np.full(t.grid.shape, float(k))))
                for k, t in enumerate(tiles)]
    out = stitch_tiles(labelled[::-1], (12, 12))

    centres = np.array([3.0, 6.0, 9.0])
    nearest = np.argmin(np.abs(np.arange(12)[:, None] + 0.5 - centres[None, :]), axis=1)
    expected = nearest[:, None] * 3 + nearest[None, :]
    assert np.array_equal(out.values, expected.astype(float))

def test_stitch_detects_gaps():
    """Test that uncovered cells are an error"""
    with pytest.raises(CoverageError):
        stitch_tiles([Tile(0, 0, Grid.from_array(np.zeros((2, 2))))], (2, 4))
    with pytest.raises(CoverageError):
        stitch_tiles([], (2, 2))
