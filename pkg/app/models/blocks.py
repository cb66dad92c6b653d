from dataclasses import dataclass, field
from typing import Dict, List

from app.models.grid import Grid


@dataclass(eq=False)
class Block:
    """A nodata-free high-resolution training block cut from one area."""
    area: int
    row_off: int
    col_off: int
    grid: Grid


@dataclass(eq=False)
class BlockStore:
    blocks: List[Block] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def cell_size(self) -> float:
        return self.blocks[0].grid.cell_size

    def by_area(self) -> Dict[int, List[Block]]:
        areas: Dict[int, List[Block]] = {}
        for block in self.blocks:
            areas.setdefault(block.area, []).append(block)
        return areas
