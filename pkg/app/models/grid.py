from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import DimensionError, ParameterError


@dataclass(eq=False)
class Grid:
    """
    Georeferenced single-band elevation raster.

    ``values`` has shape (nrows, ncols); row 0 is the northern (top) row.
    """
    ncols: int
    nrows: int
    cell_size: float
    xll: float
    yll: float
    values: np.ndarray
    nodata_value: float = field(default=settings.NODATA_VALUE)

    def __post_init__(self):
        if self.ncols < 1 or self.nrows < 1:
            raise DimensionError(f"Grid must have at least one cell, got {self.nrows}x{self.ncols}")
        if not self.cell_size > 0:
            raise ParameterError(f"cell_size must be positive, got {self.cell_size}")
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.nrows, self.ncols):
            raise DimensionError(
                f"values shape {self.values.shape} does not match {self.nrows}x{self.ncols}"
            )
        invalid = ~np.isfinite(self.values) & (self.values != self.nodata_value)
        if invalid.any():
            raise ParameterError("Grid values must be finite or equal to nodata_value")

    @classmethod
    def from_array(
        cls,
        values: np.ndarray,
        cell_size: float = 1.0,
        xll: float = 0.0,
        yll: float = 0.0,
        nodata_value: float = settings.NODATA_VALUE,
    ) -> "Grid":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionError(f"Expected a 2-D array, got {values.ndim}-D")
        nrows, ncols = values.shape
        return cls(ncols, nrows, float(cell_size), float(xll), float(yll), values.copy(), nodata_value)

    def like(self, values: np.ndarray, cell_size: Optional[float] = None) -> "Grid":
        """A grid sharing this grid's lower-left corner and nodata sentinel."""
        return Grid.from_array(
            values,
            cell_size=self.cell_size if cell_size is None else cell_size,
            xll=self.xll,
            yll=self.yll,
            nodata_value=self.nodata_value,
        )

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def extent(self) -> Tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) in world coordinates"""
        return (
            self.xll,
            self.yll,
            self.xll + self.ncols * self.cell_size,
            self.yll + self.nrows * self.cell_size,
        )

    def valid_mask(self) -> np.ndarray:
        return self.values != self.nodata_value

    def has_nodata(self) -> bool:
        return not bool(self.valid_mask().all())

    def cell_center(self, row: int, col: int) -> Tuple[float, float]:
        x = self.xll + (col + 0.5) * self.cell_size
        y = self.yll + (self.nrows - 1 - row + 0.5) * self.cell_size
        return x, y

    def cell_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        """World x per column and y per row."""
        xs = self.xll + (np.arange(self.ncols) + 0.5) * self.cell_size
        ys = self.yll + (self.nrows - 1 - np.arange(self.nrows) + 0.5) * self.cell_size
        return xs, ys

    def same_geometry(self, other: "Grid") -> bool:
        return (
            self.shape == other.shape
            and np.isclose(self.cell_size, other.cell_size, rtol=1e-12, atol=0.0)
            and np.isclose(self.xll, other.xll, rtol=0.0, atol=1e-9 * self.cell_size)
            and np.isclose(self.yll, other.yll, rtol=0.0, atol=1e-9 * self.cell_size)
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return (
            self.ncols == other.ncols
            and self.nrows == other.nrows
            and self.cell_size == other.cell_size
            and self.xll == other.xll
            and self.yll == other.yll
            and self.nodata_value == other.nodata_value
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        return (
            f"Grid({self.nrows}x{self.ncols}, cell_size={self.cell_size}, "
            f"xll={self.xll}, yll={self.yll})"
        )


@dataclass(eq=False)
class Tile:
    """A window of a parent grid; offsets are in parent cells."""
    row_off: int
    col_off: int
    grid: Grid

    @property
    def nrows(self) -> int:
        return self.grid.nrows

    @property
    def ncols(self) -> int:
        return self.grid.ncols

    def center(self) -> Tuple[float, float]:
        """Tile center in parent cell-index space (row, col)."""
        return (self.row_off + self.nrows / 2.0, self.col_off + self.ncols / 2.0)
