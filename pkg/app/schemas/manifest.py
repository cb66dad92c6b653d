from datetime import datetime
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from app.core.settings import AppConstants
from app.schemas.training import TrainingSummary


class ParamSpec(BaseModel):
    name: str = Field(..., description="Dotted parameter name")
    shape: List[int] = Field(..., description="Array shape")


class ModelManifest(BaseModel):
    """First line of a model file; the float64 payload follows in ``parameters`` order"""
    magic: str = Field(AppConstants.MODEL_MAGIC, description="File type marker")
    version: int = Field(AppConstants.MODEL_FORMAT_VERSION, description="Format version")
    n: int = Field(..., ge=1, description="Number of 2x subnetworks")
    s: int = Field(..., ge=1, description="IDB channel split divisor")
    features: int = Field(..., ge=1, description="Trunk width")
    source_cell_size: Optional[float] = Field(None, description="Input cell size of stage 0 (m)")
    offset: float = Field(0.0, description="Elevation normalisation offset (m)")
    scale: float = Field(1.0, gt=0, description="Elevation normalisation scale (m)")
    entry: str = Field("stage", description="Multi-resolution mode: chain entered at any matching stage")
    training: TrainingSummary = Field(default_factory=TrainingSummary)
    parameters: List[ParamSpec] = Field(default_factory=list)


class RunManifest(BaseModel):
    """Describes how the files in an output directory were produced"""
    command: str = Field(..., description="Subcommand name")
    config: Dict[str, Any] = Field(default_factory=dict, description="Fully resolved options")
    inputs: Dict[str, str] = Field(default_factory=dict, description="Input paths by role")
    outputs: Dict[str, str] = Field(default_factory=dict, description="Output paths by role")
    seed: Optional[int] = Field(None, description="Random seed, where one applies")
    tool_version: str = Field(..., description="Package version")
    started_at: datetime = Field(..., description="UTC start time")
    finished_at: datetime = Field(..., description="UTC end time")
