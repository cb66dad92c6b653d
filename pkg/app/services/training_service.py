"""
Training-data blocking, patch sampling and the training loop.
"""
import csv
import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from app.core.exceptions import ConfigError, TrainingDivergedError
from app.core.optim import adam_step
from app.core.tensor import Tensor
from app.models.blocks import Block, BlockStore
from app.models.grid import Grid
from app.models.network import MsmModel
from app.schemas.training import AdamConfig, TrainConfig, TrainingSummary
from app.services.network_service import init_model, msm_forward, multiscale_loss, save_model
from app.services.raster_service import nn_pick, subgrid, tile_offsets

logger = logging.getLogger(__name__)

LOSS_HISTORY_HEADER = ["iteration", "lr", "loss"]


class LossRecord(BaseModel):
    iteration: int = Field(..., ge=1, description="1-based iteration number")
    lr: float = Field(..., description="Learning rate used for the update")
    loss: float = Field(..., description="Multi-scale loss before the update")


def build_blocks(areas: Sequence[Grid], cfg: TrainConfig) -> BlockStore:
    """
    Cut every area into block x block windows at stride block - block_overlap,
    dropping windows that contain nodata. Areas smaller than one block are
    skipped with a warning.
    """
    store = BlockStore()
    cell_size = None
    for area_id, area in enumerate(areas):
        if area.nrows < cfg.block or area.ncols < cfg.block:
            logger.warning(
                "Skipping area %d: %dx%d is smaller than one %d-cell block",
                area_id, area.nrows, area.ncols, cfg.block,
            )
            continue
        if cell_size is None:
            cell_size = area.cell_size
        elif not math.isclose(area.cell_size, cell_size, rel_tol=1e-9):
            raise ConfigError(
                f"Training areas must share a cell size: {area.cell_size} vs {cell_size}"
            )

        dropped = 0
        for row_off in tile_offsets(area.nrows, cfg.block, cfg.block_overlap):
            for col_off in tile_offsets(area.ncols, cfg.block, cfg.block_overlap):
                window = subgrid(area, row_off, col_off, cfg.block, cfg.block)
                if window.has_nodata():
                    dropped += 1
                    continue
                store.blocks.append(Block(area_id, row_off, col_off, window))
        if dropped:
            logger.info("Area %d: dropped %d block(s) containing nodata", area_id, dropped)

    logger.info("Built %d training block(s) from %d area(s)", len(store), len(areas))
    return store


def _pick_blocks(store: BlockStore, cfg: TrainConfig, rng: np.random.Generator) -> List[Block]:
    if not cfg.stratified:
        idx = rng.integers(0, len(store), size=cfg.batch_size)
        return [store.blocks[i] for i in idx]

    areas = store.by_area()
    order = [areas[a] for a in sorted(areas)]
    perm = rng.permutation(len(order))
    picked = []
    for b in range(cfg.batch_size):
        candidates = order[perm[b % len(order)]]
        picked.append(candidates[rng.integers(0, len(candidates))])
    return picked


def sample_batch(
    store: BlockStore, cfg: TrainConfig, rng: np.random.Generator
) -> Tuple[np.ndarray, List[np.ndarray]]:
    """
    Draw ``batch_size`` random high-resolution patches.

    Returns the input batch (N x 1 x p x p) and targets for scales 1..n,
    where scale i is the patch decimated by 2^(n - i).
    """
    if len(store) == 0:
        raise ConfigError("No training blocks to sample from")
    n = cfg.n_scales
    edge = cfg.patch_size * 2 ** n

    patches = np.empty((cfg.batch_size, 1, edge, edge))
    for b, block in enumerate(_pick_blocks(store, cfg, rng)):
        g = block.grid
        if edge > g.nrows or edge > g.ncols:
            raise ConfigError(f"Patch edge {edge} exceeds the {g.nrows}x{g.ncols} block")
        r = rng.integers(0, g.nrows - edge + 1)
        c = rng.integers(0, g.ncols - edge + 1)
        patches[b, 0] = g.values[r:r + edge, c:c + edge]

    inputs = nn_pick(patches, 2 ** n).copy()
    targets = [nn_pick(patches, 2 ** (n - i)).copy() for i in range(1, n + 1)]
    return inputs, targets


def fit_normalisation(store: BlockStore) -> Tuple[float, float]:
    """Mean and standard deviation of every training elevation."""
    values = np.concatenate([b.grid.values.ravel() for b in store.blocks])
    offset = float(values.mean())
    scale = float(values.std())
    return offset, (scale if scale > 0 else 1.0)


def train(
    store: BlockStore,
    cfg: TrainConfig,
    checkpoint_dir: Optional[Union[str, Path]] = None,
) -> Tuple[MsmModel, List[LossRecord]]:
    """
    Train a fresh model on ``store``.

    Every iteration samples a batch, runs the chain, sums the per-scale L1
    losses and takes one Adam step. The learning rate drops once, after
    ``lr_drop_after`` iterations.
    """
    if len(store) == 0:
        raise ConfigError("No training blocks to train on")
    rng = np.random.default_rng(cfg.seed)
    model = init_model(
        cfg.n_scales,
        cfg.split_divisor,
        cfg.features,
        rng,
        source_cell_size=store.cell_size * 2 ** cfg.n_scales,
    )
    if cfg.normalise:
        model.offset, model.scale = fit_normalisation(store)

    # Set up optimiser state
    params = model.parameters()
    adam = AdamConfig(lr=cfg.lr, weight_decay=cfg.weight_decay)
    history: List[LossRecord] = []
    logger.info(
        "Training %d-stage model (%d parameters) for %d iterations on %d block(s)",
        model.n, sum(p.size for p in params), cfg.total_iters, len(store),
    )

    for it in range(1, cfg.total_iters + 1):
        adam.lr = cfg.lr_at(it)
        if it == cfg.lr_drop_after + 1:
            logger.info("Learning rate dropped to %g at iteration %d", adam.lr, it)

        # Forward pass over every scale, then one optimiser step
        model.zero_grad()
        inputs, targets = sample_batch(store, cfg, rng)
        loss = multiscale_loss(msm_forward(Tensor(inputs), model), targets)
        value = float(loss.data)
        # Stop before a NaN reaches the weights
        if not math.isfinite(value):
            raise TrainingDivergedError(f"Loss became {value} at iteration {it} (lr={adam.lr:g})")
        loss.backward()
        adam_step(params, adam)
        history.append(LossRecord(iteration=it, lr=adam.lr, loss=value))

        if it % cfg.log_every == 0 or it == cfg.total_iters:
            logger.info("iter %d  lr %.3g  loss %.6f", it, adam.lr, value)

        # Snapshot the model mid-run
        if checkpoint_dir is not None and cfg.checkpoint_every and it % cfg.checkpoint_every == 0:
            model.training = _summary(cfg, store, it, value)
            path = Path(checkpoint_dir) / f"checkpoint_{it:07d}.msm"
            save_model(model, path)
            logger.info("Checkpoint written to %s", path)

    final = history[-1].loss if history else None
    model.training = _summary(cfg, store, cfg.total_iters, final)
    return model, history


def _summary(cfg: TrainConfig, store: BlockStore, iterations: int, loss: Optional[float]) -> TrainingSummary:
    return TrainingSummary(
        iterations=iterations,
        seed=cfg.seed,
        final_loss=loss,
        batch_size=cfg.batch_size,
        patch_size=cfg.patch_size,
        blocks=len(store),
    )


def write_loss_history(history: Sequence[LossRecord], path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LOSS_HISTORY_HEADER)
        for record in history:
            writer.writerow([record.iteration, repr(record.lr), repr(record.loss)])
