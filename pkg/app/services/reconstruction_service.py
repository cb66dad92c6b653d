import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from app.core.config import settings
from app.core.tensor import no_grad
from app.models.grid import Grid, Tile
from app.models.network import MsmModel
from app.services.network_service import entry_stage, msm_forward
from app.services.raster_service import check_factor, split_into_tiles, stitch_tiles

logger = logging.getLogger(__name__)


def _forward_tile(tile: Tile, m: MsmModel, stage: int, steps: int, factor: int) -> Tile:
    g = tile.grid
    fine_cell = g.cell_size / factor
    if g.has_nodata():
        values = np.full((g.nrows * factor, g.ncols * factor), g.nodata_value)
    else:
        with no_grad():
            outputs = msm_forward(g.values[None, None], m, start=stage, steps=steps)
        values = outputs[-1].data[0, 0]
    return Tile(tile.row_off * factor, tile.col_off * factor, g.like(values, cell_size=fine_cell))


def reconstruct(
    g: Grid,
    m: MsmModel,
    factor: int,
    block: Optional[int] = None,
    overlap: Optional[int] = None,
    threads: int = 1,
) -> Grid:
    """
    Super-resolve ``g`` by ``factor`` (a power of two) with the trained chain.

    The grid is processed in overlapping tiles entered at the stage matching
    its cell size; each output cell comes from the tile whose centre is
    nearest. Tiles containing nodata come back entirely nodata.
    """
    factor = check_factor(factor)
    steps = int(np.log2(factor))
    stage = entry_stage(m, g.cell_size, steps)

    block = settings.INFER_BLOCK if block is None else block
    overlap = settings.INFER_OVERLAP if overlap is None else overlap
    block = min(block, g.nrows, g.ncols)
    if overlap >= block:
        overlap = block // 2

    tiles = split_into_tiles(g, block, overlap)
    logger.info(
        "Reconstructing %dx%d grid x%d from stage %d: %d tile(s) of %d cells, %d thread(s)",
        g.nrows, g.ncols, factor, stage, len(tiles), block, threads,
    )
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        outputs = list(executor.map(lambda t: _forward_tile(t, m, stage, steps, factor), tiles))

    return stitch_tiles(outputs, (g.nrows * factor, g.ncols * factor))
