import io
import logging
from typing import IO, List, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

from app.core.config import settings
from app.core.exceptions import (
    CoverageError,
    DimensionError,
    GridParseError,
    ParameterError,
)
from app.core.settings import AppConstants
from app.models.grid import Grid, Tile

logger = logging.getLogger(__name__)

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")
_REQUIRED_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize")


def check_factor(factor: int) -> int:
    """
    Validate a resampling factor (a power of two, at least 2)
    """
    if isinstance(factor, bool) or int(factor) != factor:
        raise ParameterError(AppConstants.ERROR_MESSAGES["bad_factor"].format(factor=factor))
    factor = int(factor)
    if factor < 2 or factor & (factor - 1):
        raise ParameterError(AppConstants.ERROR_MESSAGES["bad_factor"].format(factor=factor))
    return factor


def _format_number(value: float) -> str:
    value = float(value)
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _parse_number(token: str, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise GridParseError(f"non-numeric token '{token}'", line_no)
    return value


def read_ascii_grid(text: Union[str, IO[str]]) -> Grid:
    """
    Parse an ESRI ASCII grid.

    Header keywords are matched case-insensitively; a missing NODATA_VALUE
    falls back to the configured default.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    header = {}
    header_lines = {}
    rows: List[List[float]] = []
    row_lines: List[int] = []
    ncols = nrows = None
    line_no = 0

    for line_no, raw in enumerate(stream, start=1):
        tokens = raw.split()
        if not tokens:
            continue

        key = tokens[0].lower()
        if key in _HEADER_KEYS and not rows:
            if len(tokens) != 2:
                raise GridParseError(f"malformed header line '{raw.strip()}'", line_no)
            if key in header:
                raise GridParseError(f"duplicate header keyword '{tokens[0]}'", line_no)
            header[key] = _parse_number(tokens[1], line_no)
            header_lines[key] = line_no
            continue

        if ncols is None:
            missing = [k.upper() for k in _REQUIRED_KEYS if k not in header]
            if missing:
                raise GridParseError(f"missing header keyword(s) {', '.join(missing)}", line_no)
            ncols, nrows = header["ncols"], header["nrows"]
            if not ncols.is_integer() or not nrows.is_integer() or ncols < 1 or nrows < 1:
                raise GridParseError("NCOLS and NROWS must be positive integers", line_no)
            ncols, nrows = int(ncols), int(nrows)

        if len(tokens) != ncols:
            raise GridParseError(f"expected {ncols} values, found {len(tokens)}", line_no)
        if len(rows) == nrows:
            raise GridParseError(f"more than {nrows} data rows", line_no)
        rows.append([_parse_number(t, line_no) for t in tokens])
        row_lines.append(line_no)

    if ncols is None:
        raise GridParseError("no data rows found", max(line_no, 1))
    if len(rows) != nrows:
        raise GridParseError(f"expected {nrows} data rows, found {len(rows)}", line_no)

    if header["cellsize"] <= 0:
        raise GridParseError("CELLSIZE must be positive", header_lines["cellsize"])
    nodata = header.get("nodata_value", settings.NODATA_VALUE)
    values = np.array(rows, dtype=np.float64)
    bad = ~(np.isfinite(values) | (values == nodata))
    if bad.any():
        raise GridParseError("grid holds non-finite values", row_lines[int(np.argmax(bad.any(axis=1)))])

    return Grid(
        ncols=ncols,
        nrows=nrows,
        cell_size=header["cellsize"],
        xll=header["xllcorner"],
        yll=header["yllcorner"],
        values=values,
        nodata_value=nodata,
    )


def write_ascii_grid(g: Grid, integer: bool = False) -> str:
    """
    Serialise a grid as ESRI ASCII text, rows top-to-bottom.

    Values use the shortest repr that round-trips; ``integer`` rounds
    every cell (used for class rasters).
    """
    lines = [
        f"NCOLS {g.ncols}",
        f"NROWS {g.nrows}",
        f"XLLCORNER {_format_number(g.xll)}",
        f"YLLCORNER {_format_number(g.yll)}",
        f"CELLSIZE {_format_number(g.cell_size)}",
        f"NODATA_VALUE {_format_number(g.nodata_value)}",
    ]
    values = np.rint(g.values) if integer else g.values
    for row in values.tolist():
        lines.append(" ".join(_format_number(v) for v in row))
    return "\n".join(lines) + "\n"


def load_grid(path) -> Grid:
    with open(path, "r", encoding="ascii") as fh:
        return read_ascii_grid(fh)


def save_grid(g: Grid, path, integer: bool = False) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(write_ascii_grid(g, integer=integer))


def nn_pick(values: np.ndarray, factor: int) -> np.ndarray:
    """
    Centre-offset nearest-neighbour decimation of the last two axes
    """
    offset = factor // 2
    return values[..., offset::factor, offset::factor]


def downsample_nn(g: Grid, factor: int) -> Grid:
    """
    Coarsen a grid by picking the centre-offset cell of each factor x factor block
    """
    factor = check_factor(factor)
    if g.ncols % factor or g.nrows % factor:
        raise DimensionError(
            f"Factor {factor} does not divide grid dimensions {g.nrows}x{g.ncols}"
        )
    return g.like(nn_pick(g.values, factor).copy(), cell_size=g.cell_size * factor)


def compute_slope(g: Grid) -> Grid:
    """
    Percent slope from Horn's eight-neighbour stencil.

    Borders use edge-replicated neighbours; a cell with any nodata in its
    3x3 neighbourhood is nodata.
    """
    if g.nrows < 3 or g.ncols < 3:
        raise DimensionError(f"Slope needs at least 3x3 cells, got {g.nrows}x{g.ncols}")

    padded = np.pad(g.values, 1, mode="edge")
    a, b, c = padded[:-2, :-2], padded[:-2, 1:-1], padded[:-2, 2:]
    d, f = padded[1:-1, :-2], padded[1:-1, 2:]
    gg, h, i = padded[2:, :-2], padded[2:, 1:-1], padded[2:, 2:]

    dz_dx = ((c + 2.0 * f + i) - (a + 2.0 * d + gg)) / (8.0 * g.cell_size)
    dz_dy = ((gg + 2.0 * h + i) - (a + 2.0 * b + c)) / (8.0 * g.cell_size)
    slope = 100.0 * np.sqrt(dz_dx ** 2 + dz_dy ** 2)

    valid = ndimage.minimum_filter(g.valid_mask().astype(np.uint8), size=3, mode="nearest") == 1
    slope = np.where(valid, slope, g.nodata_value)
    return g.like(slope)


def subgrid(g: Grid, row_off: int, col_off: int, nrows: int, ncols: int) -> Grid:
    """
    Cut a window out of a grid, keeping world coordinates
    """
    if row_off < 0 or col_off < 0 or row_off + nrows > g.nrows or col_off + ncols > g.ncols:
        raise DimensionError("Window lies outside the grid")
    values = g.values[row_off:row_off + nrows, col_off:col_off + ncols].copy()
    return Grid(
        ncols=ncols,
        nrows=nrows,
        cell_size=g.cell_size,
        xll=g.xll + col_off * g.cell_size,
        yll=g.yll + (g.nrows - row_off - nrows) * g.cell_size,
        values=values,
        nodata_value=g.nodata_value,
    )


def tile_offsets(size: int, block: int, overlap: int) -> List[int]:
    """Start offsets along one axis; the last tile is clamped to the edge."""
    stride = block - overlap
    offsets = list(range(0, size - block, stride))
    offsets.append(size - block)
    return offsets


def split_into_tiles(g: Grid, block: int, overlap: int) -> List[Tile]:
    """
    Cover a grid with block x block tiles placed at stride block - overlap
    """
    if not (0 <= overlap < block <= min(g.ncols, g.nrows)):
        raise ParameterError(
            f"Need 0 <= overlap < block <= {min(g.ncols, g.nrows)}, "
            f"got block={block}, overlap={overlap}"
        )
    tiles = []
    for row_off in tile_offsets(g.nrows, block, overlap):
        for col_off in tile_offsets(g.ncols, block, overlap):
            tiles.append(Tile(row_off, col_off, subgrid(g, row_off, col_off, block, block)))
    return tiles


def stitch_tiles(tiles: Sequence[Tile], out_shape: Tuple[int, int]) -> Grid:
    """
    Reassemble tiles, each output cell owned by the tile whose centre is
    nearest in Chebyshev distance. Chebyshev ties are broken by the distance
    along the other axis, then by the smaller offset, so ownership matches
    per-axis centre cropping of a regular tiling.
    """
    if not tiles:
        raise CoverageError("No tiles to stitch")
    nrows, ncols = out_shape
    ordered = sorted(tiles, key=lambda t: (t.row_off, t.col_off))
    first = ordered[0].grid
    cell_size = first.cell_size

    values = np.full((nrows, ncols), first.nodata_value, dtype=np.float64)
    best_far = np.full((nrows, ncols), np.inf)
    best_near = np.full((nrows, ncols), np.inf)

    for tile in ordered:
        if tile.grid.cell_size != cell_size:
            raise ParameterError("Tiles must share a cell size")
        r0, c0, h, w = tile.row_off, tile.col_off, tile.nrows, tile.ncols
        if r0 < 0 or c0 < 0 or r0 + h > nrows or c0 + w > ncols:
            raise CoverageError(f"Tile at ({r0}, {c0}) extends past the output grid")
        dy = np.abs(np.arange(h) + 0.5 - h / 2.0)[:, None]
        dx = np.abs(np.arange(w) + 0.5 - w / 2.0)[None, :]
        far = np.maximum(dy, dx)
        near = np.minimum(dy, dx)
        win_far = best_far[r0:r0 + h, c0:c0 + w]
        win_near = best_near[r0:r0 + h, c0:c0 + w]
        # strict comparison keeps the earlier (smaller offset) tile on a full tie
        owned = (far < win_far) | ((far == win_far) & (near < win_near))
        win_far[owned] = far[owned]
        win_near[owned] = near[owned]
        values[r0:r0 + h, c0:c0 + w][owned] = tile.grid.values[owned]

    if np.isinf(best_far).any():
        raise CoverageError(f"{int(np.isinf(best_far).sum())} output cells are not covered by any tile")

    xll = first.xll - ordered[0].col_off * cell_size
    yll = first.yll - (nrows - ordered[0].row_off - first.nrows) * cell_size
    return Grid(ncols, nrows, cell_size, xll, yll, values, first.nodata_value)
