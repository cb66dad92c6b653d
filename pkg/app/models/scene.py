from dataclasses import dataclass, field
from typing import List

import numpy as np

from app.models.grid import Grid
from app.models.vector import PolygonSet, Polyline


@dataclass(eq=False)
class SynthScene:
    dem: Grid
    landcover: Grid
    roads: List[Polyline]
    buildings: PolygonSet
    base: np.ndarray
    heights: List[float] = field(default_factory=list)
