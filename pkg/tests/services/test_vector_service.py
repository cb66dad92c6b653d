import json

import pytest

from app.core.exceptions import VectorFormatError
from app.models.vector import Polygon, PolygonSet, Polyline
from app.services.vector_service import (
    buildings_to_geojson,
    load_buildings,
    load_roads,
    parse_buildings,
    parse_roads,
    roads_to_geojson,
    save_geojson,
)


def _collection(*geometries):
    return {
        "type": "FeatureCollection",
        "features": [{"type": "Feature", "properties": {}, "geometry": g} for g in geometries],
    }

def test_parse_roads_ids():
    """Test id lookup from the feature, its properties or its position"""
    doc = _collection({"type": "LineString", "coordinates": [[0, 0], [1, 1]]})
    doc["features"].append(
        {"type": "Feature", "id": "main", "geometry": {"type": "LineString", "coordinates": [[0, 0], [2, 0]]}}
    )
    doc["features"].append(
        {
            "type": "Feature",
            "properties": {"id": 17},
            "geometry": {"type": "LineString", "coordinates": [[0, 0], [0, 2]]},
        }
    )
    assert [r.id for r in parse_roads(doc)] == ["0", "main", "17"]

def test_unsupported_geometry():
    """Test that only the expected geometry type is accepted"""
    with pytest.raises(VectorFormatError):
        parse_roads(_collection({"type": "MultiLineString", "coordinates": [[[0, 0], [1, 1]]]}))
    with pytest.raises(VectorFormatError):
        parse_buildings(_collection({"type": "Point", "coordinates": [0, 0]}))
    with pytest.raises(VectorFormatError):
        parse_roads({"type": "Feature"})

def test_polygon_with_hole_rejected():
    """Test that multi-ring polygons are rejected"""
    outer = [[0, 0], [10, 0], [10, 10], [0, 10], [0, 0]]
    hole = [[2, 2], [4, 2], [4, 4], [2, 4], [2, 2]]
    with pytest.raises(VectorFormatError):
        parse_buildings(_collection({"type": "Polygon", "coordinates": [outer, hole]}))

def test_geojson_files(tmp_path):
    """Test writing and reading roads and buildings"""
    roads = [Polyline("r1", [[0.5, 1.5], [9.5, 1.5]])]
    buildings = PolygonSet([Polygon("b1", [[1, 1], [4, 1], [4, 3], [1, 3]])])
    save_geojson(roads_to_geojson(roads), tmp_path / "roads.geojson")
    save_geojson(buildings_to_geojson(buildings), tmp_path / "buildings.geojson")
    loaded_roads = load_roads(tmp_path / "roads.geojson")
    loaded_buildings = load_buildings(tmp_path / "buildings.geojson")
    assert loaded_roads[0].id == "r1"
    assert loaded_roads[0].vertices.tolist() == [[0.5, 1.5], [9.5, 1.5]]
    assert list(loaded_buildings)[0].area == pytest.approx(6.0)

def test_invalid_json(tmp_path):
    """Test that malformed files raise a format error"""
    path = tmp_path / "bad.geojson"
    path.write_text("{not json")
    with pytest.raises(VectorFormatError):
        load_roads(path)
    path.write_text(json.dumps({"type": "FeatureCollection"}))
    with pytest.raises(VectorFormatError):
        load_buildings(path)

def test_self_intersecting_footprint_rejected():
    """Test that a bow-tie footprint fails to load"""
    ring = [[0, 0], [10, 10], [10, 0], [0, 4], [0, 0]]
    with pytest.raises(VectorFormatError):
        parse_buildings(_collection({"type": "Polygon", "coordinates": [ring]}))

def test_malformed_coordinates():
    """Test that coordinates the geometry cannot be built from are a format error"""
    with pytest.raises(VectorFormatError):
        parse_roads(_collection({"type": "LineString", "coordinates": [[0, 0]]}))
    with pytest.raises(VectorFormatError):
        parse_buildings(_collection({"type": "Polygon", "coordinates": [[[0, 0], [1, 1]]]}))
