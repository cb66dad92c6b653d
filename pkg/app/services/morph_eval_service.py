"""
Morphological accuracy: road-profile correlation and building-boundary
recovery.
"""
import logging
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage
from skimage.draw import polygon as draw_polygon
from skimage.morphology import skeletonize

from app.core.config import settings
from app.core.exceptions import (
    DimensionError,
    OutOfBoundsError,
    ParameterError,
    ReportValidationError,
    ShapeError,
    UndefinedCorrelationError,
)
from app.core.settings import AppConstants
from app.models.grid import Grid
from app.models.vector import PolygonSet, Polyline
from app.schemas.metrics import BoundaryReport, BufferRatio, ProfileReport, RoadPcc, SkippedRoad
from app.services.numeric_eval_service import check_aligned

logger = logging.getLogger(__name__)

FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


def densify_polyline(p: Polyline, step: float) -> np.ndarray:
    """
    Insert points every ``step`` metres along each segment. Original
    vertices are kept; the last sub-segment of a segment may be shorter.
    """
    if not step > 0:
        raise ParameterError(f"Densification step must be positive, got {step}")
    pieces = []
    for a, b in zip(p.vertices[:-1], p.vertices[1:]):
        length = float(np.hypot(*(b - a)))
        count = max(1, int(np.ceil(length / step - 1e-9)))
        t = np.arange(count) * (step / length)
        pieces.append(a + t[:, None] * (b - a))
    pieces.append(p.vertices[-1:])
    return np.vstack(pieces)


def _index_coordinates(g: Grid, vertices: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Continuous (row, col) with cell centres at integers."""
    xmin, ymin, xmax, ymax = g.extent
    x, y = vertices[:, 0], vertices[:, 1]
    tol = 1e-9 * g.cell_size
    outside = (x < xmin - tol) | (x > xmax + tol) | (y < ymin - tol) | (y > ymax + tol)
    if outside.any():
        i = int(np.argmax(outside))
        raise OutOfBoundsError(f"Vertex ({x[i]}, {y[i]}) lies outside the grid extent {g.extent}")
    rows = (ymax - y) / g.cell_size - 0.5
    cols = (x - xmin) / g.cell_size - 0.5
    return rows, cols


def extract_profile(g: Grid, vertices: np.ndarray, method: Optional[str] = None) -> np.ndarray:
    """
    Elevation at each vertex; nodata samples come back as NaN.

    ``nearest`` reads the cell containing the vertex, ``bilinear``
    interpolates between the four surrounding cell centres.
    """
    method = settings.PROFILE_SAMPLING if method is None else method
    vertices = np.asarray(vertices, dtype=np.float64)
    rows, cols = _index_coordinates(g, vertices)
    values = np.where(g.valid_mask(), g.values, np.nan)

    if method == "nearest":
        r = np.clip(np.floor(rows + 0.5).astype(int), 0, g.nrows - 1)
        c = np.clip(np.floor(cols + 0.5).astype(int), 0, g.ncols - 1)
        return values[r, c]
    if method == "bilinear":
        rows = np.clip(rows, 0, g.nrows - 1)
        cols = np.clip(cols, 0, g.ncols - 1)
        r0 = np.clip(np.floor(rows).astype(int), 0, max(g.nrows - 2, 0))
        c0 = np.clip(np.floor(cols).astype(int), 0, max(g.ncols - 2, 0))
        r1 = np.minimum(r0 + 1, g.nrows - 1)
        c1 = np.minimum(c0 + 1, g.ncols - 1)
        tr, tc = rows - r0, cols - c0
        top = values[r0, c0] * (1 - tc) + values[r0, c1] * tc
        bottom = values[r1, c0] * (1 - tc) + values[r1, c1] * tc
        return top * (1 - tr) + bottom * tr
    raise ParameterError(
        AppConstants.ERROR_MESSAGES["unknown_method"].format(
            method=method, choices=AppConstants.PROFILE_SAMPLING_METHODS
        )
    )


def pearson_cc(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ParameterError(f"Profiles must be 1-D and equally long, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise UndefinedCorrelationError("Correlation needs at least two samples")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise UndefinedCorrelationError("Correlation is undefined for a constant profile")
    dx = x - x.mean()
    dy = y - y.mean()
    r = float(np.dot(dx, dy) / np.sqrt(np.dot(dx, dx) * np.dot(dy, dy)))
    return min(1.0, max(-1.0, r))


def road_profile_report(
    recon: Grid,
    ref: Grid,
    roads: Sequence[Polyline],
    sampling: Optional[str] = None,
    thresholds: Optional[Iterable[float]] = None,
) -> ProfileReport:
    """
    Correlate reconstruction and reference profiles along every road,
    densified at the reconstruction cell size.
    """
    if not roads:
        raise ReportValidationError("No roads to evaluate")
    check_aligned(recon, ref)
    sampling = settings.PROFILE_SAMPLING if sampling is None else sampling
    thresholds = list(AppConstants.PCC_THRESHOLDS if thresholds is None else thresholds)
    step = recon.cell_size

    evaluated: List[RoadPcc] = []
    skipped: List[SkippedRoad] = []
    for road in roads:
        try:
            vertices = densify_polyline(road, step)
            a = extract_profile(recon, vertices, sampling)
            b = extract_profile(ref, vertices, sampling)
            keep = ~(np.isnan(a) | np.isnan(b))
            r = pearson_cc(a[keep], b[keep])
        except (UndefinedCorrelationError, OutOfBoundsError) as e:
            logger.warning("Skipping road %s: %s", road.id, e)
            skipped.append(SkippedRoad(id=road.id, reason=str(e)))
            continue
        evaluated.append(RoadPcc(id=road.id, pcc=r, samples=int(keep.sum())))

    report = ProfileReport(roads=evaluated, skipped=skipped, sampling=sampling, step=step)
    if evaluated:
        pccs = np.array([r.pcc for r in evaluated])
        report.mean_pcc = float(pccs.mean())
        report.std_pcc = float(pccs.std())
        report.above = {f"{t:g}": float((pccs > t).mean()) for t in thresholds}
    return report


def rasterize_polygons(polys: PolygonSet, like: Grid) -> np.ndarray:
    """Cells of ``like`` whose centres fall inside any polygon."""
    filled = np.zeros(like.shape, dtype=bool)
    xmin, _, _, ymax = like.extent
    for poly in polys:
        rows = (ymax - poly.ring[:, 1]) / like.cell_size - 0.5
        cols = (poly.ring[:, 0] - xmin) / like.cell_size - 0.5
        rr, cc = draw_polygon(rows, cols, shape=like.shape)
        filled[rr, cc] = True
    return filled


def boundary_cells(filled: np.ndarray) -> np.ndarray:
    """Filled cells with at least one unfilled (or off-grid) 4-neighbour."""
    interior = ndimage.binary_erosion(filled, structure=FOUR_CONNECTED, border_value=0)
    return filled & ~interior


def reference_boundary_raster(
    polys: PolygonSet, like: Grid, min_area: Optional[float] = None
) -> Tuple[np.ndarray, int]:
    """
    Rasterise footprints on ``like``'s cells, merge touching ones, drop
    components smaller than ``min_area`` square metres and return the
    boundary mask with its cell count.
    """
    if len(polys) == 0:
        raise ReportValidationError("No building polygons to rasterise")
    min_area = settings.MIN_BUILDING_AREA if min_area is None else min_area

    filled = rasterize_polygons(polys, like)
    labels, count = ndimage.label(filled, structure=FOUR_CONNECTED)
    if count:
        areas = np.bincount(labels.ravel())[1:] * like.cell_size ** 2
        small = np.flatnonzero(areas < min_area) + 1
        if small.size:
            logger.debug("Dropping %d footprint component(s) under %g m²", small.size, min_area)
            filled[np.isin(labels, small)] = False

    boundary = boundary_cells(filled)
    return boundary, int(boundary.sum())


def extract_dem_boundaries(
    recon: Grid,
    edge_threshold: Optional[float] = None,
    kernel: Optional[Sequence[Sequence[float]]] = None,
    method: Optional[str] = None,
) -> np.ndarray:
    """
    High-pass filter the DEM, keep cells whose absolute response reaches
    ``edge_threshold`` and thin them to one-cell-wide lines.
    """
    if recon.nrows < 3 or recon.ncols < 3:
        raise DimensionError(f"Boundary extraction needs at least 3x3 cells, got {recon.nrows}x{recon.ncols}")
    edge_threshold = settings.EDGE_THRESHOLD if edge_threshold is None else edge_threshold
    kernel = np.asarray(AppConstants.HIGH_PASS_KERNEL if kernel is None else kernel, dtype=np.float64)
    method = settings.THINNING_METHOD if method is None else method
    if method not in AppConstants.THINNING_METHODS:
        raise ParameterError(
            AppConstants.ERROR_MESSAGES["unknown_method"].format(
                method=method, choices=AppConstants.THINNING_METHODS
            )
        )

    valid = recon.valid_mask()
    values = np.where(valid, recon.values, 0.0)
    response = ndimage.convolve(values, kernel, mode="nearest")
    reliable = ndimage.minimum_filter(valid.astype(np.uint8), size=kernel.shape, mode="nearest") == 1
    candidates = (np.abs(response) >= edge_threshold) & reliable
    if not candidates.any():
        return candidates
    return skeletonize(candidates, method=method)


def boundary_match_report(
    extracted: np.ndarray,
    reference: np.ndarray,
    reference_count: Optional[int] = None,
    buffers: Optional[Sequence[int]] = None,
    edge_threshold: Optional[float] = None,
    kernel: Optional[Sequence[Sequence[float]]] = None,
    thinning: Optional[str] = None,
) -> BoundaryReport:
    """
    For each buffer b, the number of extracted cells within Chebyshev
    distance b of a reference boundary cell, divided by the reference count.
    """
    extracted = np.asarray(extracted, dtype=bool)
    reference = np.asarray(reference, dtype=bool)
    if extracted.shape != reference.shape:
        raise ShapeError(f"Boundary masks differ in shape: {extracted.shape} vs {reference.shape}")
    reference_count = int(reference.sum()) if reference_count is None else reference_count
    if reference_count == 0:
        raise ReportValidationError("Reference boundary is empty")
    buffers = sorted(settings.BOUNDARY_BUFFERS if buffers is None else buffers)
    if buffers and buffers[0] < 0:
        raise ParameterError(f"Buffers must be non-negative, got {buffers}")

    ratios = []
    for b in buffers:
        if b == 0:
            zone = reference
        else:
            zone = ndimage.binary_dilation(reference, structure=np.ones((2 * b + 1, 2 * b + 1), dtype=bool))
        selected = int((extracted & zone).sum())
        ratios.append(BufferRatio(buffer=b, selected=selected, ratio=selected / reference_count))

    return BoundaryReport(
        reference_count=reference_count,
        extracted_count=int(extracted.sum()),
        ratios=ratios,
        edge_threshold=settings.EDGE_THRESHOLD if edge_threshold is None else edge_threshold,
        kernel=np.asarray(AppConstants.HIGH_PASS_KERNEL if kernel is None else kernel).tolist(),
        thinning=settings.THINNING_METHOD if thinning is None else thinning,
    )


def building_boundary_report(
    recon: Grid,
    buildings: PolygonSet,
    edge_threshold: Optional[float] = None,
    min_area: Optional[float] = None,
    buffers: Optional[Sequence[int]] = None,
    kernel: Optional[Sequence[Sequence[float]]] = None,
    method: Optional[str] = None,
) -> BoundaryReport:
    """Extract boundaries from ``recon`` and match them against the footprints."""
    reference, count = reference_boundary_raster(buildings, recon, min_area)
    extracted = extract_dem_boundaries(recon, edge_threshold, kernel, method)
    return boundary_match_report(
        extracted, reference, count, buffers,
        edge_threshold=edge_threshold, kernel=kernel, thinning=method,
    )
