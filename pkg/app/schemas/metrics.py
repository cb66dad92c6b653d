from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class ErrorStats(BaseModel):
    """Pointwise error statistics of a reconstruction against a reference"""
    mae: float = Field(..., ge=0, description="Mean absolute error (m)")
    rmse: float = Field(..., ge=0, description="Root mean square error (m)")
    std: float = Field(..., ge=0, description="Population standard deviation of the error (m)")
    bias: float = Field(..., description="Mean signed error, reconstruction minus reference (m)")
    n: int = Field(..., ge=1, description="Number of valid cells")


class BinStats(BaseModel):
    label: str = Field(..., description="Bin or class label")
    frequency: float = Field(..., ge=0, le=1, description="Share of valid cells in this bin")
    count: int = Field(..., ge=0, description="Valid cells in this bin")
    stats: Optional[ErrorStats] = Field(None, description="Statistics; absent for an empty bin")
    empty: bool = Field(False, description="True when the bin holds no valid cells")


class BinnedReport(BaseModel):
    """Error statistics per slope range or land-cover class"""
    kind: str = Field(..., description="slope or landcover")
    bins: List[BinStats] = Field(default_factory=list)
    mean_mae: Optional[float] = Field(None, description="Unweighted mean of per-bin MAE over populated bins")
    mean_rmse: Optional[float] = Field(None, description="Unweighted mean of per-bin RMSE over populated bins")
    overall: ErrorStats = Field(..., description="Cell-weighted statistics over every binned cell")
    averaging: str = Field("unweighted", description="How mean_mae and mean_rmse combine bins")


class RoadPcc(BaseModel):
    id: str = Field(..., description="Road identifier")
    pcc: float = Field(..., ge=-1, le=1, description="Pearson correlation of the two profiles")
    samples: int = Field(..., ge=2, description="Profile length")


class SkippedRoad(BaseModel):
    id: str
    reason: str


class ProfileReport(BaseModel):
    """Road-profile correlation between a reconstruction and the reference"""
    roads: List[RoadPcc] = Field(default_factory=list)
    mean_pcc: Optional[float] = Field(None, description="Mean PCC over evaluated roads")
    std_pcc: Optional[float] = Field(None, description="Population std of PCC over evaluated roads")
    above: Dict[str, float] = Field(
        default_factory=dict, description="Share of evaluated roads with PCC above each threshold"
    )
    skipped: List[SkippedRoad] = Field(default_factory=list)
    sampling: str = Field("nearest", description="Profile sampling method")
    step: float = Field(..., gt=0, description="Densification step (m)")

    @property
    def skipped_count(self) -> int:
        return len(self.skipped)


class BufferRatio(BaseModel):
    buffer: int = Field(..., ge=0, description="Buffer width in cells (Chebyshev)")
    selected: int = Field(..., ge=0, description="Extracted cells within the buffer")
    ratio: float = Field(..., ge=0, description="selected / reference count")


class BoundaryReport(BaseModel):
    """Share of reference building boundary recovered from a DEM"""
    reference_count: int = Field(..., ge=1, description="Reference boundary cells")
    extracted_count: int = Field(..., ge=0, description="Boundary cells extracted from the DEM")
    ratios: List[BufferRatio] = Field(default_factory=list)
    edge_threshold: float = Field(..., description="High-pass response threshold")
    kernel: List[List[float]] = Field(..., description="High-pass kernel")
    thinning: str = Field(..., description="Thinning method")


class EvaluationRecord(BaseModel):
    """One evaluation result as written by the eval commands and merged by ``report``"""
    kind: str = Field(..., description="numeric, slope, landcover, roads or buildings")
    method: str = Field(..., description="Reconstruction method label")
    recon: str = Field(..., description="Reconstruction grid path")
    ref: str = Field(..., description="Reference grid path")
    result: Dict[str, Any] = Field(..., description="The serialised report")
