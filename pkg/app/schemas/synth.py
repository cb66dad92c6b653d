from typing import Tuple

from pydantic import BaseModel, Field, model_validator

from app.core.config import settings


class SynthConfig(BaseModel):
    """Parameters of a procedural urban scene"""
    size: int = Field(256, ge=8, description="Scene edge in cells")
    cell_size: float = Field(0.5, gt=0, description="Cell size (m)")
    seed: int = Field(settings.DEFAULT_SEED, description="Generator seed")
    xll: float = Field(0.0, description="Lower-left x (m)")
    yll: float = Field(0.0, description="Lower-left y (m)")
    terrain_amplitude: float = Field(4.0, ge=0, description="Base terrain amplitude (m)")
    terrain_wavelength: float = Field(150.0, gt=0, description="Base terrain correlation length (m)")
    terrain_waves: int = Field(4, ge=1, description="Number of summed sinusoids")
    terrain_base: float = Field(20.0, description="Mean ground elevation (m)")
    road_spacing: float = Field(40.0, gt=0, description="Distance between parallel roads (m)")
    road_width: float = Field(6.0, gt=0, description="Road width (m)")
    building_density: float = Field(0.3, ge=0, le=1, description="Target share of parcel area covered by buildings")
    footprint_range: Tuple[float, float] = Field((5.0, 15.0), description="Building edge length range (m)")
    height_range: Tuple[float, float] = Field((4.0, 25.0), description="Building height range (m)")
    vegetation_noise: float = Field(0.0, ge=0, description="Std of noise added on natural cells (m)")
    max_attempts: int = Field(50, ge=1, description="Placement attempts per requested building")

    @model_validator(mode="after")
    def check_ranges(self) -> "SynthConfig":
        for name in ("footprint_range", "height_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ValueError(f"{name} must satisfy 0 < low <= high, got ({lo}, {hi})")
        if self.footprint_range[0] < self.cell_size:
            raise ValueError("footprint_range must not be smaller than one cell")
        if self.road_spacing <= self.road_width:
            raise ValueError("road_spacing must exceed road_width")
        return self
