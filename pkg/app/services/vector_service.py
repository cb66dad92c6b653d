"""
Minimal GeoJSON support: FeatureCollections of LineString (roads) and
single-ring Polygon (buildings) features in planar grid coordinates.
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

from shapely.errors import ShapelyError
from shapely.geometry import shape
from shapely.geometry.base import BaseGeometry

from app.core.exceptions import VectorFormatError
from app.models.vector import Polygon, Polyline, PolygonSet


def _features(doc: Dict[str, Any], source: str) -> List[Dict[str, Any]]:
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise VectorFormatError(f"{source}: expected a GeoJSON FeatureCollection")
    features = doc.get("features")
    if not isinstance(features, list):
        raise VectorFormatError(f"{source}: FeatureCollection has no 'features' list")
    return features


def _feature_id(feature: Dict[str, Any], index: int) -> str:
    if feature.get("id") is not None:
        return str(feature["id"])
    props = feature.get("properties") or {}
    if props.get("id") is not None:
        return str(props["id"])
    return str(index)


def _geometry(feature: Dict[str, Any], expected: str, source: str, index: int) -> Dict[str, Any]:
    geometry = feature.get("geometry") if isinstance(feature, dict) else None
    if not isinstance(geometry, dict):
        raise VectorFormatError(f"{source}: feature {index} has no geometry")
    kind = geometry.get("type")
    if kind != expected:
        raise VectorFormatError(
            f"{source}: feature {index} has unsupported geometry type {kind!r} (expected {expected})"
        )
    return geometry


def _shape(geometry: Dict[str, Any], source: str, index: int) -> BaseGeometry:
    try:
        return shape(geometry)
    except (ShapelyError, ValueError, TypeError, KeyError, IndexError, AttributeError) as e:
        raise VectorFormatError(f"{source}: feature {index} has malformed coordinates ({e})") from e


def parse_roads(doc: Dict[str, Any], source: str = "roads") -> List[Polyline]:
    roads = []
    for index, feature in enumerate(_features(doc, source)):
        line = _shape(_geometry(feature, "LineString", source, index), source, index)
        roads.append(Polyline(_feature_id(feature, index), list(line.coords)))
    return roads


def parse_buildings(doc: Dict[str, Any], source: str = "buildings") -> PolygonSet:
    polygons = []
    for index, feature in enumerate(_features(doc, source)):
        footprint = _shape(_geometry(feature, "Polygon", source, index), source, index)
        if footprint.is_empty:
            raise VectorFormatError(f"{source}: feature {index} has an empty polygon")
        if len(footprint.interiors):
            raise VectorFormatError(
                f"{source}: feature {index} has {1 + len(footprint.interiors)} rings; "
                "only single-ring polygons are supported"
            )
        polygons.append(Polygon(_feature_id(feature, index), list(footprint.exterior.coords)))
    return PolygonSet(polygons)


def _load(path: Union[str, Path]) -> Dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise VectorFormatError(f"{path}: invalid JSON ({e.msg} at line {e.lineno})") from e


def load_roads(path: Union[str, Path]) -> List[Polyline]:
    return parse_roads(_load(path), str(path))


def load_buildings(path: Union[str, Path]) -> PolygonSet:
    return parse_buildings(_load(path), str(path))


def roads_to_geojson(roads: Sequence[Polyline]) -> Dict[str, Any]:
    return {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "id": road.id,
                "properties": {"id": road.id},
                "geometry": {"type": "LineString", "coordinates": road.vertices.tolist()},
            }
            for road in roads
        ],
    }


def buildings_to_geojson(buildings: PolygonSet) -> Dict[str, Any]:
    return {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "id": poly.id,
                "properties": {"id": poly.id},
                "geometry": {"type": "Polygon", "coordinates": [poly.ring.tolist()]},
            }
            for poly in buildings
        ],
    }


def save_geojson(doc: Dict[str, Any], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
