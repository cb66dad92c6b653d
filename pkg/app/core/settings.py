from app.core.config import settings

# Project
PROJECT_NAME = settings.PROJECT_NAME
VERSION = settings.VERSION

# Runtime
LOG_LEVEL = settings.LOG_LEVEL
THREADS = settings.THREADS

# Raster
NODATA_VALUE = settings.NODATA_VALUE

# Network
SPLIT_DIVISOR = settings.SPLIT_DIVISOR
FEATURES = settings.FEATURES

# Inference tiling
INFER_BLOCK = settings.INFER_BLOCK
INFER_OVERLAP = settings.INFER_OVERLAP


# Application Constants
class AppConstants:
    # Land-cover classes
    LANDCOVER_ROAD = 1
    LANDCOVER_BUILDING = 2
    LANDCOVER_NATURAL = 3
    LANDCOVER_MULTI_SURFACE = 4
    LANDCOVER_OTHER = 5
    LANDCOVER_LABELS = {
        1: "road",
        2: "building",
        3: "natural",
        4: "multi-surface",
        5: "other",
    }

    # Slope bins (percent); ten ranges with an open top bin
    SLOPE_EDGES = [0.0, 5.0, 10.0, 15.0, 20.0, 30.0, 45.0, 60.0, 80.0, 100.0, float("inf")]

    # 3x3 high-pass (edge enhancement) kernel
    HIGH_PASS_KERNEL = [
        [-0.7, -1.0, -0.7],
        [-1.0, 6.8, -1.0],
        [-0.7, -1.0, -0.7],
    ]
    THINNING_METHODS = ["zhang", "lee"]
    PROFILE_SAMPLING_METHODS = ["nearest", "bilinear"]

    # Road profile quality thresholds
    PCC_THRESHOLDS = [0.9, 0.95]

    # Model checkpoint format
    MODEL_MAGIC = "MSMCNN"
    MODEL_FORMAT_VERSION = 1

    # Upsampling methods
    UPSAMPLE_METHODS = ["nn", "bi", "cc", "idw"]

    # Output file names
    FILE_RUN_MANIFEST = "run_manifest.json"
    FILE_MODEL = "model.msm"
    FILE_LOSS_HISTORY = "loss_history.csv"
    FILE_SCENE_DEM = "dem.asc"
    FILE_SCENE_LANDCOVER = "landcover.asc"
    FILE_SCENE_ROADS = "roads.geojson"
    FILE_SCENE_BUILDINGS = "buildings.geojson"

    # Report kinds
    REPORT_NUMERIC = "numeric"
    REPORT_SLOPE = "slope"
    REPORT_LANDCOVER = "landcover"
    REPORT_ROADS = "roads"
    REPORT_BUILDINGS = "buildings"

    # Error Messages
    ERROR_MESSAGES = {
        "shape_mismatch": "Grids differ in shape or cell size: {left} vs {right}",
        "empty_domain": "No valid cells to evaluate",
        "unknown_method": "Unknown method '{method}', expected one of {choices}",
        "stage_mismatch": "Model has no stage accepting {cell_size} m input for {steps} step(s)",
        "bad_factor": "Factor must be a power of two >= 2, got {factor}",
    }
