"""Error hierarchy shared by every module.

All domain failures derive from ``DemSrError`` (a ``ValueError``) so callers can
catch one type; the CLI turns them into exit status 1.
"""
from typing import Optional


class DemSrError(ValueError):
    """Base class for domain errors"""


class GridParseError(DemSrError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DimensionError(DemSrError):
    pass


class ParameterError(DemSrError):
    pass


class CoverageError(DemSrError):
    pass


class ShapeError(DemSrError):
    pass


class ContractError(DemSrError):
    pass


class ModelLoadError(DemSrError):
    pass


class ModelVersionError(ModelLoadError):
    pass


class ModelShapeError(ModelLoadError):
    pass


class ModelTruncatedError(ModelLoadError):
    pass


class StageError(DemSrError):
    pass


class ConfigError(DemSrError):
    pass


class TrainingDivergedError(DemSrError):
    pass


class EmptyDomainError(DemSrError):
    pass


class ReportValidationError(DemSrError):
    pass


class UndefinedCorrelationError(DemSrError):
    pass


class OutOfBoundsError(DemSrError):
    pass


class PlacementError(DemSrError):
    pass


class VectorFormatError(DemSrError):
    pass
