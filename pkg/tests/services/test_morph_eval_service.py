import numpy as np
import pytest

from app.core.exceptions import (
    OutOfBoundsError,
    ParameterError,
    ReportValidationError,
    UndefinedCorrelationError,
)
from app.models.grid import Grid
from app.models.vector import Polygon, PolygonSet, Polyline
from app.services.morph_eval_service import (
    boundary_cells,
    boundary_match_report,
    building_boundary_report,
    densify_polyline,
    extract_dem_boundaries,
    extract_profile,
    pearson_cc,
    rasterize_polygons,
    reference_boundary_raster,
    road_profile_report,
)


def _square(pid, x0, y0, x1, y1):
    return Polygon(pid, [[x0, y0], [x1, y0], [x1, y1], [x0, y1]])


def _canvas(size=40, cell_size=0.5):
    return Grid.from_array(np.zeros((size, size)), cell_size=cell_size)

def test_densify_counts():
    """Test densified vertex counts for long and short segments"""
    assert len(densify_polyline(Polyline("a", [[0, 0], [20, 0]]), 1.0)) == 21
    assert len(densify_polyline(Polyline("b", [[0, 0], [0.5, 0]]), 1.0)) == 2
    assert len(densify_polyline(Polyline("c", [[0, 0], [2.5, 0]]), 1.0)) == 4

def test_densify_keeps_path():
    """Test that densification keeps vertices and path length"""
    line = Polyline("r", [[0, 0], [3, 4], [3, 9.5]])
    dense = densify_polyline(line, 0.7)
    assert np.array_equal(dense[0], line.vertices[0])
    assert np.array_equal(dense[-1], line.vertices[-1])
    assert any(np.allclose(v, [3, 4]) for v in dense)
    steps = np.hypot(*np.diff(dense, axis=0).T)
    assert steps.sum() == pytest.approx(line.length)
    assert steps.max() <= 0.7 + 1e-12
    with pytest.raises(ParameterError):
        densify_polyline(line, 0.0)

def test_extract_profile(ramp_grid):
    """Test nearest and bilinear sampling"""
    pts = np.array([[101.0, 215.0], [102.0, 215.0], [102.1, 215.0]])
    assert extract_profile(ramp_grid, pts, "nearest").tolist() == [10.0, 12.0, 12.0]
    assert extract_profile(ramp_grid, pts[:2], "bilinear") == pytest.approx([10.0, 11.0])
    with pytest.raises(OutOfBoundsError):
        extract_profile(ramp_grid, np.array([[90.0, 210.0]]))
    with pytest.raises(ParameterError):
        extract_profile(ramp_grid, pts, "cubic")

def test_extract_profile_nodata_is_nan(ramp_grid):
    """Test that nodata cells sample as NaN"""
    values = ramp_grid.values.copy()
    values[0, 0] = ramp_grid.nodata_value
    out = extract_profile(ramp_grid.like(values), np.array([[101.0, 215.0]]), "nearest")
    assert np.isnan(out[0])

def test_pearson_cc_values():
    """Test perfect, inverse and partial correlation"""
    assert pearson_cc([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson_cc([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert pearson_cc([1, 2, 3, 4, 5], [2, 1, 4, 3, 5]) == pytest.approx(0.8)

def test_pearson_cc_affine_invariant(rng):
    """Test invariance to positive scaling and offsets"""
    x, y = rng.normal(size=50), rng.normal(size=50)
    assert pearson_cc(x, 3.0 * y + 7.0) == pytest.approx(pearson_cc(x, y))

def test_pearson_cc_undefined():
    """Test constant and too-short profiles"""
    with pytest.raises(UndefinedCorrelationError):
        pearson_cc([1, 1, 1], [1, 2, 3])
    with pytest.raises(UndefinedCorrelationError):
        pearson_cc([1], [2])

def test_road_profile_report():
    """Test per-road PCC with flat and off-grid roads skipped"""
    cols = np.tile(np.arange(20.0), (20, 1))
    g = Grid.from_array(3.0 * cols)
    roads = [
        Polyline("along", [[0.5, 10.5], [19.5, 10.5]]),
        Polyline("flat", [[5.5, 0.5], [5.5, 19.5]]),
        Polyline("outside", [[-5.0, 5.0], [5.0, 5.0]]),
    ]
    report = road_profile_report(g, g, roads)
    assert [r.id for r in report.roads] == ["along"]
    assert report.roads[0].pcc == pytest.approx(1.0)
    assert report.roads[0].samples == 20
    assert {s.id for s in report.skipped} == {"flat", "outside"}
    assert report.skipped_count == 2
    assert report.mean_pcc == pytest.approx(1.0)
    assert report.above == {"0.9": 1.0, "0.95": 1.0}

def test_road_profile_report_needs_roads(ramp_grid):
    """Test that an empty road set is rejected"""
    with pytest.raises(ReportValidationError):
        road_profile_report(ramp_grid, ramp_grid, [])

def test_square_boundary_ring():
    """Test a 10 m square on 0.5 m cells"""
    polys = PolygonSet([_square("b", 2.0, 2.0, 12.0, 12.0)])
    assert rasterize_polygons(polys, _canvas()).sum() == 400
    boundary, count = reference_boundary_raster(polys, _canvas())
    assert count == 76
    assert boundary.sum() == 76

def test_small_footprints_removed():
    """Test that components under the minimum area are dropped"""
    polys = PolygonSet([_square("big", 2.0, 2.0, 12.0, 12.0), _square("shed", 14.0, 14.0, 18.0, 18.0)])
    _, count = reference_boundary_raster(polys, _canvas(), min_area=20.0)
    assert count == 76

def test_abutting_footprints_merge():
    """Test that touching polygons share one outer boundary"""
    polys = PolygonSet([_square("w", 2.0, 2.0, 7.0, 12.0), _square("e", 7.0, 2.0, 12.0, 12.0)])
    _, count = reference_boundary_raster(polys, _canvas())
    assert count == 76

def test_boundary_cells_touching_grid_edge():
    """Test that off-grid neighbours count as unfilled"""
    assert boundary_cells(np.ones((3, 3), dtype=bool)).sum() == 8

def test_flat_dem_has_no_boundaries():
    """Test empty extraction on a flat surface and an infinite threshold"""
    assert not extract_dem_boundaries(Grid.from_array(np.full((10, 10), 5.0))).any()
    box = np.zeros((10, 10))
    box[3:7, 3:7] = 10.0
    assert not extract_dem_boundaries(Grid.from_array(box), edge_threshold=float("inf")).any()

@pytest.mark.parametrize("method", ["zhang", "lee"])
def test_box_building_is_recovered(method):
    """Test that a box-shaped building's outline is found near its footprint"""
    polys = PolygonSet([_square("b", 2.0, 2.0, 12.0, 12.0)])
    dem = _canvas()
    dem.values[rasterize_polygons(polys, dem)] = 10.0
    report = building_boundary_report(dem, polys, edge_threshold=1.0, buffers=[0, 1, 2], method=method)
    assert report.reference_count == 76
    assert report.ratios[1].ratio >= 0.9
    assert report.thinning == method

def test_ratios_grow_with_buffer(rng):
    """Test that ratios never decrease as the buffer widens"""
    extracted = rng.random((30, 30)) < 0.1
    reference = rng.random((30, 30)) < 0.05
    report = boundary_match_report(extracted, reference, buffers=[3, 0, 1, 2])
    ratios = [r.ratio for r in report.ratios]
    assert [r.buffer for r in report.ratios] == [0, 1, 2, 3]
    assert ratios == sorted(ratios)

def test_disjoint_boundaries():
    """Test zero overlap at buffer zero and the empty-reference error"""
    extracted = np.zeros((10, 10), dtype=bool)
    reference = np.zeros((10, 10), dtype=bool)
    extracted[0, 0] = True
    reference[5, 5] = True
    report = boundary_match_report(extracted, reference, buffers=[0, 4, 5])
    assert [r.selected for r in report.ratios] == [0, 0, 1]
    with pytest.raises(ReportValidationError):
        boundary_match_report(extracted, np.zeros((10, 10), dtype=bool))
