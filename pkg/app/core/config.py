import json
from typing import Annotated, List, Union
from pydantic_settings import BaseSettings, NoDecode, SettingsConfigDict
from pydantic import field_validator
from dotenv import load_dotenv

load_dotenv()


class Settings(BaseSettings):
    PROJECT_NAME: str = "UrbanDEM-SR"
    VERSION: str = "1.0.0"

    # Runtime
    LOG_LEVEL: str = "INFO"
    THREADS: int = 1
    DEFAULT_SEED: int = 0

    # Raster
    NODATA_VALUE: float = -9999.0

    # Training
    BATCH_SIZE: int = 64
    PATCH_SIZE: int = 32
    LEARNING_RATE: float = 1e-4
    LR_DROP_FACTOR: float = 10.0
    LR_DROP_AFTER: int = 250_000
    WEIGHT_DECAY: float = 1e-4
    TOTAL_ITERS: int = 2000
    TRAIN_BLOCK: int = 500
    TRAIN_BLOCK_OVERLAP: int = 250
    ADAM_BETA1: float = 0.9
    ADAM_BETA2: float = 0.999
    ADAM_EPSILON: float = 1e-8

    # Network
    SPLIT_DIVISOR: int = 4
    FEATURES: int = 64

    # Inference tiling
    INFER_BLOCK: int = 250
    INFER_OVERLAP: int = 125

    # Baseline interpolation
    IDW_POWER: float = 2.0
    IDW_NEIGHBOURS: int = 4
    BICUBIC_A: float = -0.5

    # Morphological assessment
    EDGE_THRESHOLD: float = 1.0
    MIN_BUILDING_AREA: float = 20.0  # m²
    BOUNDARY_BUFFERS: Annotated[List[int], NoDecode] = [0, 1, 2, 3]
    THINNING_METHOD: str = "zhang"
    PROFILE_SAMPLING: str = "nearest"

    @field_validator("BOUNDARY_BUFFERS", mode="before")
    @classmethod
    def assemble_buffers(cls, v: Union[str, List[int]]) -> List[int]:
        if isinstance(v, str) and not v.startswith("["):
            return [int(i.strip()) for i in v.split(",") if i.strip()]
        elif isinstance(v, str):
            return json.loads(v)
        elif isinstance(v, list):
            return v
        raise ValueError(v)

    @field_validator("THREADS")
    @classmethod
    def positive_threads(cls, v: int) -> int:
        if v < 1:
            raise ValueError("THREADS must be at least 1")
        return v

    model_config = SettingsConfigDict(case_sensitive=True, env_file=".env", extra="ignore")


settings = Settings()
