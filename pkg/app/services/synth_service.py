"""
Procedural urban scenes: smooth base terrain, an axis-aligned road grid and
box-shaped buildings, with a matching land-cover raster.
"""
import logging
import math
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
from scipy import ndimage

from app.core.exceptions import PlacementError
from app.core.settings import AppConstants
from app.models.grid import Grid
from app.models.scene import SynthScene
from app.models.vector import Polygon, PolygonSet, Polyline
from app.schemas.synth import SynthConfig
from app.services.raster_service import save_grid
from app.services.vector_service import buildings_to_geojson, roads_to_geojson, save_geojson

logger = logging.getLogger(__name__)

# Wavelengths are drawn from [MIN_WAVE_FACTOR, MAX_WAVE_FACTOR] x terrain_wavelength
MIN_WAVE_FACTOR = 0.75
MAX_WAVE_FACTOR = 1.5


def terrain_slope_bound(cfg: SynthConfig) -> float:
    """Upper bound (m/m) on the base terrain gradient magnitude."""
    return cfg.terrain_amplitude * 2.0 * math.pi / (MIN_WAVE_FACTOR * cfg.terrain_wavelength)


def _wave_field(
    xs: np.ndarray, ys: np.ndarray, amplitude: float, wavelength: float, waves: int, rng: np.random.Generator
) -> np.ndarray:
    field = np.zeros((ys.size, xs.size))
    for _ in range(waves):
        a = amplitude * rng.uniform(0.5, 1.0) / waves
        lam = wavelength * rng.uniform(MIN_WAVE_FACTOR, MAX_WAVE_FACTOR)
        theta = rng.uniform(0.0, math.pi)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        kx, ky = math.cos(theta) * 2.0 * math.pi / lam, math.sin(theta) * 2.0 * math.pi / lam
        field += a * np.sin(kx * xs[None, :] + ky * ys[:, None] + phase)
    return field


def _road_centres(size: int, spacing_cells: int) -> List[int]:
    return list(range(spacing_cells // 2, size, spacing_cells))


def road_layout(cfg: SynthConfig) -> Tuple[np.ndarray, List[Polyline]]:
    """
    Road mask and centrelines. Roads run along cell-centre rows and columns;
    a cell belongs to a road when its centre lies within half the road width
    of the centreline.
    """
    size, cs = cfg.size, cfg.cell_size
    spacing = max(1, int(round(cfg.road_spacing / cs)))
    half = int(math.floor(cfg.road_width / (2.0 * cs) + 1e-9))
    xs = cfg.xll + (np.arange(size) + 0.5) * cs
    ys = cfg.yll + (size - 1 - np.arange(size) + 0.5) * cs

    mask = np.zeros((size, size), dtype=bool)
    roads = []
    for k, rc in enumerate(_road_centres(size, spacing)):
        mask[max(0, rc - half):rc + half + 1, :] = True
        roads.append(Polyline(f"h{k}", [[xs[0], ys[rc]], [xs[-1], ys[rc]]]))
    for k, cc in enumerate(_road_centres(size, spacing)):
        mask[:, max(0, cc - half):cc + half + 1] = True
        roads.append(Polyline(f"v{k}", [[xs[cc], ys[0]], [xs[cc], ys[-1]]]))
    return mask, roads


def _place_buildings(
    cfg: SynthConfig, road_mask: np.ndarray, rng: np.random.Generator
) -> List[Tuple[int, int, int, int, float]]:
    cs = cfg.cell_size
    lo, hi = cfg.footprint_range
    mean_cells = ((lo + hi) / 2.0 / cs) ** 2
    target = int(round(cfg.building_density * (~road_mask).sum() / mean_cells))
    if target == 0:
        return []

    grow = ndimage.generate_binary_structure(2, 2)
    forbidden = ndimage.binary_dilation(road_mask, structure=grow)
    placed = []
    attempts = 0
    while len(placed) < target:
        attempts += 1
        if attempts > cfg.max_attempts * target:
            raise PlacementError(
                f"Placed {len(placed)} of {target} buildings after {attempts - 1} attempts; "
                f"lower building_density ({cfg.building_density})"
            )
        h = max(1, int(round(rng.uniform(lo, hi) / cs)))
        w = max(1, int(round(rng.uniform(lo, hi) / cs)))
        if h > cfg.size or w > cfg.size:
            continue
        r0 = int(rng.integers(0, cfg.size - h + 1))
        c0 = int(rng.integers(0, cfg.size - w + 1))
        if forbidden[r0:r0 + h, c0:c0 + w].any():
            continue
        height = float(rng.uniform(*cfg.height_range))
        placed.append((r0, c0, h, w, height))
        # keep a one-cell gap between footprints
        forbidden[max(0, r0 - 1):r0 + h + 1, max(0, c0 - 1):c0 + w + 1] = True
    return placed


def generate_scene(cfg: SynthConfig) -> SynthScene:
    """
    Build a scene fully determined by ``cfg`` (including its seed).

    Road cells carry the base terrain, building cells carry base terrain
    plus the building height, and the remaining cells are split between
    natural, multi-surface and other classes by a smooth random field.
    """
    rng = np.random.default_rng(cfg.seed)
    size, cs = cfg.size, cfg.cell_size
    xs = cfg.xll + (np.arange(size) + 0.5) * cs
    ys = cfg.yll + (size - 1 - np.arange(size) + 0.5) * cs

    # Smooth ground surface and the field that assigns land-cover classes
    base = cfg.terrain_base + _wave_field(
        xs, ys, cfg.terrain_amplitude, cfg.terrain_wavelength, cfg.terrain_waves, rng
    )
    cover_field = _wave_field(xs, ys, 1.0, cfg.road_spacing, 3, rng)

    # Classify cells, roads last so they override the random field
    road_mask, roads = road_layout(cfg)
    landcover = np.full((size, size), AppConstants.LANDCOVER_OTHER, dtype=np.float64)
    landcover[cover_field > 0.15] = AppConstants.LANDCOVER_NATURAL
    landcover[cover_field < -0.15] = AppConstants.LANDCOVER_MULTI_SURFACE
    landcover[road_mask] = AppConstants.LANDCOVER_ROAD

    # Raise building footprints above the ground
    dem = base.copy()
    polygons = []
    heights = []
    xmin, ymax = cfg.xll, cfg.yll + size * cs
    for k, (r0, c0, h, w, height) in enumerate(_place_buildings(cfg, road_mask, rng)):
        dem[r0:r0 + h, c0:c0 + w] = base[r0:r0 + h, c0:c0 + w] + height
        landcover[r0:r0 + h, c0:c0 + w] = AppConstants.LANDCOVER_BUILDING
        x0, x1 = xmin + c0 * cs, xmin + (c0 + w) * cs
        y0, y1 = ymax - (r0 + h) * cs, ymax - r0 * cs
        polygons.append(Polygon(f"b{k}", [[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]))
        heights.append(height)

    # Roughen natural cells only
    if cfg.vegetation_noise > 0:
        natural = landcover == AppConstants.LANDCOVER_NATURAL
        dem[natural] += rng.normal(0.0, cfg.vegetation_noise, size=int(natural.sum()))

    logger.info(
        "Generated %dx%d scene: %d roads, %d buildings (seed %d)",
        size, size, len(roads), len(polygons), cfg.seed,
    )
    return SynthScene(
        dem=Grid.from_array(dem, cell_size=cs, xll=cfg.xll, yll=cfg.yll),
        landcover=Grid.from_array(landcover, cell_size=cs, xll=cfg.xll, yll=cfg.yll),
        roads=roads,
        buildings=PolygonSet(polygons),
        base=base,
        heights=heights,
    )


def write_scene(scene: SynthScene, out_dir: Union[str, Path]) -> Dict[str, str]:
    """Write every layer of a scene; returns output paths by role."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "dem": out / AppConstants.FILE_SCENE_DEM,
        "landcover": out / AppConstants.FILE_SCENE_LANDCOVER,
        "roads": out / AppConstants.FILE_SCENE_ROADS,
        "buildings": out / AppConstants.FILE_SCENE_BUILDINGS,
    }
    save_grid(scene.dem, paths["dem"])
    save_grid(scene.landcover, paths["landcover"], integer=True)
    save_geojson(roads_to_geojson(scene.roads), paths["roads"])
    save_geojson(buildings_to_geojson(scene.buildings), paths["buildings"])
    return {role: str(path) for role, path in paths.items()}
