from dataclasses import dataclass, field
from typing import List

import numpy as np
from shapely.geometry import LineString
from shapely.geometry import Polygon as ShapelyPolygon
from shapely.validation import explain_validity

from app.core.exceptions import VectorFormatError


@dataclass(eq=False)
class Polyline:
    """A road centreline in world coordinates (metres)."""
    id: str
    vertices: np.ndarray
    line: LineString = field(init=False, repr=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise VectorFormatError(f"Polyline {self.id}: vertices must be an (m, 2) array")
        if len(self.vertices) < 2:
            raise VectorFormatError(f"Polyline {self.id}: needs at least 2 vertices")
        if (np.diff(self.vertices, axis=0) == 0).all(axis=1).any():
            raise VectorFormatError(f"Polyline {self.id}: consecutive vertices must be distinct")
        self.line = LineString(self.vertices)

    @property
    def length(self) -> float:
        return float(self.line.length)


@dataclass(eq=False)
class Polygon:
    """
    A building footprint: one closed, simple exterior ring with no holes.

    Open rings are closed; zero-area and self-intersecting rings are rejected.
    """
    id: str
    ring: np.ndarray
    shape: ShapelyPolygon = field(init=False, repr=False)

    def __post_init__(self):
        ring = np.asarray(self.ring, dtype=np.float64)
        if ring.ndim != 2 or ring.shape[1] != 2 or len(ring) < 3:
            raise VectorFormatError(f"Polygon {self.id}: ring needs at least 3 (x, y) vertices")
        if len(np.unique(ring, axis=0)) < 3:
            raise VectorFormatError(f"Polygon {self.id}: ring needs at least 3 distinct vertices")

        self.shape = ShapelyPolygon(ring)
        self.ring = np.asarray(self.shape.exterior.coords, dtype=np.float64)
        if self.shape.area <= 0:
            raise VectorFormatError(f"Polygon {self.id}: ring has zero area")
        if not self.shape.is_valid:
            raise VectorFormatError(f"Polygon {self.id}: invalid ring ({explain_validity(self.shape)})")

    @property
    def area(self) -> float:
        return float(self.shape.area)


@dataclass(eq=False)
class PolygonSet:
    polygons: List[Polygon] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.polygons)

    def __iter__(self):
        return iter(self.polygons)
