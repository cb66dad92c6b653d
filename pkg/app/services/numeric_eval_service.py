"""
Pointwise accuracy of a reconstruction: MAE, RMSE and error STD, overall and
broken down by terrain slope or land-cover class.
"""
import logging
from typing import Optional, Sequence

import numpy as np

from app.core.exceptions import EmptyDomainError, ReportValidationError, ShapeError
from app.core.settings import AppConstants
from app.models.grid import Grid
from app.schemas.metrics import BinnedReport, BinStats, ErrorStats

logger = logging.getLogger(__name__)


def check_aligned(recon: Grid, ref: Grid) -> None:
    if recon.shape != ref.shape or not np.isclose(recon.cell_size, ref.cell_size, rtol=1e-12, atol=0):
        raise ShapeError(
            AppConstants.ERROR_MESSAGES["shape_mismatch"].format(left=repr(recon), right=repr(ref))
        )


def valid_cells(recon: Grid, ref: Grid, mask: Optional[np.ndarray] = None) -> np.ndarray:
    valid = recon.valid_mask() & ref.valid_mask()
    if mask is not None:
        valid &= np.asarray(mask, dtype=bool)
    return valid


def stats_from_errors(errors: np.ndarray) -> ErrorStats:
    if errors.size == 0:
        raise EmptyDomainError(AppConstants.ERROR_MESSAGES["empty_domain"])
    mean = float(errors.mean())
    return ErrorStats(
        mae=float(np.abs(errors).mean()),
        rmse=float(np.sqrt((errors ** 2).mean())),
        std=float(np.sqrt(((errors - mean) ** 2).mean())),
        bias=mean,
        n=int(errors.size),
    )


def error_stats(recon: Grid, ref: Grid, mask: Optional[np.ndarray] = None) -> ErrorStats:
    """
    Statistics of recon - ref over cells valid in both grids (and in ``mask``)
    """
    check_aligned(recon, ref)
    valid = valid_cells(recon, ref, mask)
    return stats_from_errors(recon.values[valid] - ref.values[valid])


def _binned(kind: str, errors: np.ndarray, codes: np.ndarray, labels: Sequence[str]) -> BinnedReport:
    total = errors.size
    if total == 0:
        raise EmptyDomainError(AppConstants.ERROR_MESSAGES["empty_domain"])
    bins = []
    for index, label in enumerate(labels):
        selected = errors[codes == index]
        if selected.size == 0:
            logger.debug("%s bin %s is empty", kind, label)
            bins.append(BinStats(label=label, frequency=0.0, count=0, empty=True))
            continue
        bins.append(
            BinStats(
                label=label,
                frequency=selected.size / total,
                count=int(selected.size),
                stats=stats_from_errors(selected),
            )
        )
    populated = [b.stats for b in bins if b.stats is not None]
    return BinnedReport(
        kind=kind,
        bins=bins,
        mean_mae=float(np.mean([s.mae for s in populated])),
        mean_rmse=float(np.mean([s.rmse for s in populated])),
        overall=stats_from_errors(errors),
    )


def slope_labels(edges: Sequence[float]) -> list:
    labels = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        labels.append(f">={lo:g}" if np.isinf(hi) else f"{lo:g}-{hi:g}")
    return labels


def slope_binned_stats(
    recon: Grid, ref: Grid, slope: Grid, edges: Optional[Sequence[float]] = None
) -> BinnedReport:
    """
    Error statistics per slope range (percent). Bin i holds edges[i] <= slope < edges[i+1].
    """
    edges = list(AppConstants.SLOPE_EDGES if edges is None else edges)
    if len(edges) < 2 or any(b <= a for a, b in zip(edges[:-1], edges[1:])):
        raise ReportValidationError(f"Slope edges must be strictly increasing, got {edges}")
    check_aligned(recon, ref)
    check_aligned(slope, ref)

    valid = valid_cells(recon, ref, slope.valid_mask())
    s = slope.values[valid]
    in_range = (s >= edges[0]) & (s < edges[-1])
    if not in_range.all():
        logger.warning("%d cell(s) fall outside the slope edges", int((~in_range).sum()))
    errors = (recon.values[valid] - ref.values[valid])[in_range]
    codes = np.searchsorted(np.asarray(edges), s[in_range], side="right") - 1
    return _binned(AppConstants.REPORT_SLOPE, errors, codes, slope_labels(edges))


def landcover_binned_stats(recon: Grid, ref: Grid, landcover: Grid) -> BinnedReport:
    """
    Error statistics per land-cover class (road, building, natural,
    multi-surface, other)
    """
    check_aligned(recon, ref)
    check_aligned(landcover, ref)
    valid = valid_cells(recon, ref, landcover.valid_mask())
    classes = landcover.values[valid]
    known = np.array(sorted(AppConstants.LANDCOVER_LABELS))
    unknown = np.setdiff1d(np.unique(classes), known)
    if unknown.size:
        raise ReportValidationError(f"Unknown land-cover code(s): {unknown.tolist()}")

    errors = recon.values[valid] - ref.values[valid]
    codes = np.searchsorted(known, classes)
    labels = [AppConstants.LANDCOVER_LABELS[int(c)] for c in known]
    return _binned(AppConstants.REPORT_LANDCOVER, errors, codes, labels)


def relative_improvement(candidate: float, baseline: float) -> Optional[float]:
    """Percentage reduction of ``candidate`` relative to ``baseline``."""
    if baseline == 0:
        return None
    return 100.0 * (baseline - candidate) / baseline
