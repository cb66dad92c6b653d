"""
Classical upsampling baselines: nearest neighbour, bilinear, cubic
convolution and inverse distance weighting.

Fine and coarse grids share their lower-left corner, so fine cell (i, j)
sits at coarse index coordinates ((i + 0.5) / f - 0.5, (j + 0.5) / f - 0.5).
"""
import logging
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from app.core.config import settings
from app.core.exceptions import DimensionError, ParameterError
from app.core.settings import AppConstants
from app.models.grid import Grid
from app.services.raster_service import check_factor

logger = logging.getLogger(__name__)


def fine_coordinates(n: int, factor: int) -> np.ndarray:
    """Coarse index coordinate of every fine cell centre along one axis."""
    return (np.arange(n * factor) + 0.5) / factor - 0.5


def upsample_nn(g: Grid, factor: int) -> Grid:
    """
    Replicate each coarse cell into a factor x factor block
    """
    factor = check_factor(factor)
    values = np.repeat(np.repeat(g.values, factor, axis=0), factor, axis=1)
    return g.like(values, cell_size=g.cell_size / factor)


def bilinear_weights(n: int, factor: int) -> np.ndarray:
    """
    (n * factor, n) matrix of linear interpolation weights, clamped to the
    outermost coarse centres
    """
    u = np.clip(fine_coordinates(n, factor), 0.0, n - 1)
    j0 = np.clip(np.floor(u).astype(int), 0, max(n - 2, 0))
    t = u - j0
    weights = np.zeros((n * factor, n))
    rows = np.arange(n * factor)
    np.add.at(weights, (rows, j0), 1.0 - t)
    if n > 1:
        np.add.at(weights, (rows, j0 + 1), t)
    return weights


def cubic_kernel(x: np.ndarray, a: float) -> np.ndarray:
    x = np.abs(x)
    near = ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    far = ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))


def cubic_weights(n: int, factor: int, a: float) -> np.ndarray:
    """
    (n * factor, n) matrix of cubic-convolution weights over the four
    nearest coarse centres, with edge replication past the border
    """
    u = fine_coordinates(n, factor)
    base = np.floor(u).astype(int)
    weights = np.zeros((n * factor, n))
    rows = np.arange(n * factor)
    for tap in range(-1, 3):
        k = base + tap
        np.add.at(weights, (rows, np.clip(k, 0, n - 1)), cubic_kernel(u - k, a))
    return weights


def _separable(g: Grid, row_weights: np.ndarray, col_weights: np.ndarray, factor: int) -> Grid:
    valid = g.valid_mask()
    filled = np.where(valid, g.values, 0.0)
    values = row_weights @ filled @ col_weights.T

    if not valid.all():
        touch_r = (row_weights != 0.0).astype(np.float64)
        touch_c = (col_weights != 0.0).astype(np.float64)
        touched = touch_r @ (~valid).astype(np.float64) @ touch_c.T
        values = np.where(touched > 0, g.nodata_value, values)

    return g.like(values, cell_size=g.cell_size / factor)


def upsample_bilinear(g: Grid, factor: int) -> Grid:
    """
    Bilinear interpolation at every fine cell centre
    """
    factor = check_factor(factor)
    if g.nrows < 2 or g.ncols < 2:
        raise DimensionError("Bilinear interpolation needs at least 2x2 cells")
    return _separable(g, bilinear_weights(g.nrows, factor), bilinear_weights(g.ncols, factor), factor)


def upsample_bicubic(g: Grid, factor: int, a: Optional[float] = None) -> Grid:
    """
    Cubic convolution (Keys kernel, default a = -0.5)
    """
    factor = check_factor(factor)
    a = settings.BICUBIC_A if a is None else a
    if g.nrows < 4 or g.ncols < 4:
        raise DimensionError("Cubic convolution needs at least 4x4 cells")
    return _separable(g, cubic_weights(g.nrows, factor, a), cubic_weights(g.ncols, factor, a), factor)


def upsample_idw(
    g: Grid,
    factor: int,
    power: Optional[float] = None,
    k: Optional[int] = None,
    workers: int = 1,
) -> Grid:
    """
    Inverse distance weighting over the k nearest coarse centres.

    A fine centre that coincides with a coarse centre takes its value
    exactly; any nodata neighbour makes the cell nodata.
    """
    factor = check_factor(factor)
    power = settings.IDW_POWER if power is None else power
    k = settings.IDW_NEIGHBOURS if k is None else k
    if k < 1:
        raise ParameterError(f"IDW needs k >= 1, got {k}")
    if power <= 0:
        raise ParameterError(f"IDW power must be positive, got {power}")
    k = min(k, g.nrows * g.ncols)

    rr, cc = np.meshgrid(np.arange(g.nrows, dtype=float), np.arange(g.ncols, dtype=float), indexing="ij")
    tree = cKDTree(np.column_stack([rr.ravel(), cc.ravel()]))

    fr, fc = np.meshgrid(
        fine_coordinates(g.nrows, factor), fine_coordinates(g.ncols, factor), indexing="ij"
    )
    dist, idx = tree.query(np.column_stack([fr.ravel(), fc.ravel()]), k=k, workers=workers)
    dist = dist.reshape(-1, k) * g.cell_size
    idx = idx.reshape(-1, k)

    z = g.values.ravel()[idx]
    exact = dist == 0.0
    with np.errstate(divide="ignore"):
        w = np.where(exact, 0.0, dist ** (-power))
    values = (w * z).sum(axis=1) / np.where(w.sum(axis=1) > 0, w.sum(axis=1), 1.0)
    has_exact = exact.any(axis=1)
    values = np.where(has_exact, z[np.arange(len(z)), exact.argmax(axis=1)], values)

    invalid = ~g.valid_mask().ravel()[idx]
    values = np.where(invalid.any(axis=1), g.nodata_value, values)
    return g.like(values.reshape(g.nrows * factor, g.ncols * factor), cell_size=g.cell_size / factor)


def upsample(g: Grid, method: str, factor: int, **kwargs) -> Grid:
    """
    Dispatch to one of the baseline upsamplers by short name
    """
    if method == "nn":
        return upsample_nn(g, factor)
    if method == "bi":
        return upsample_bilinear(g, factor)
    if method == "cc":
        return upsample_bicubic(g, factor, a=kwargs.get("a"))
    if method == "idw":
        return upsample_idw(
            g, factor, power=kwargs.get("power"), k=kwargs.get("k"), workers=kwargs.get("workers", 1)
        )
    raise ParameterError(
        AppConstants.ERROR_MESSAGES["unknown_method"].format(
            method=method, choices=AppConstants.UPSAMPLE_METHODS
        )
    )
