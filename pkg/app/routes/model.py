from pathlib import Path
from typing import List

import typer

from app.core.config import settings
from app.core.settings import AppConstants
from app.routes.common import cli_errors, parent_dir, threads
from app.schemas.training import TrainConfig
from app.services.network_service import load_model, save_model
from app.services.raster_service import load_grid, save_grid
from app.services.reconstruction_service import reconstruct as reconstruct_grid
from app.services.report_service import utcnow, write_run_manifest
from app.services.training_service import build_blocks, train as train_model, write_loss_history


def train(
    areas: List[Path] = typer.Option(..., "--area", help="High-resolution training grid (repeatable)"),
    out: Path = typer.Option(..., "--out", help="Output directory"),
    scales: int = typer.Option(2, "--scales", help="Number of 2x subnetworks"),
    iters: int = typer.Option(settings.TOTAL_ITERS, "--iters"),
    seed: int = typer.Option(settings.DEFAULT_SEED, "--seed"),
    batch_size: int = typer.Option(settings.BATCH_SIZE, "--batch-size"),
    patch_size: int = typer.Option(settings.PATCH_SIZE, "--patch-size", help="Patch edge at input resolution"),
    lr: float = typer.Option(settings.LEARNING_RATE, "--lr"),
    lr_drop_factor: float = typer.Option(settings.LR_DROP_FACTOR, "--lr-drop-factor"),
    lr_drop_after: int = typer.Option(settings.LR_DROP_AFTER, "--lr-drop-after"),
    weight_decay: float = typer.Option(settings.WEIGHT_DECAY, "--weight-decay"),
    block: int = typer.Option(settings.TRAIN_BLOCK, "--block"),
    block_overlap: int = typer.Option(settings.TRAIN_BLOCK_OVERLAP, "--block-overlap"),
    split: int = typer.Option(settings.SPLIT_DIVISOR, "--split", help="IDB channel split divisor"),
    features: int = typer.Option(settings.FEATURES, "--features", help="Trunk width"),
    stratified: bool = typer.Option(False, "--stratified/--uniform", help="Batch evenly across areas"),
    normalise: bool = typer.Option(True, "--normalise/--no-normalise"),
    checkpoint_every: int = typer.Option(0, "--checkpoint-every", help="0 disables checkpoints"),
    log_every: int = typer.Option(100, "--log-every"),
):
    """Train a multi-scale model on high-resolution areas"""
    started = utcnow()
    with cli_errors():
        cfg = TrainConfig(
            n_scales=scales,
            batch_size=batch_size,
            patch_size=patch_size,
            lr=lr,
            lr_drop_factor=lr_drop_factor,
            lr_drop_after=lr_drop_after,
            weight_decay=weight_decay,
            total_iters=iters,
            seed=seed,
            block=block,
            block_overlap=block_overlap,
            split_divisor=split,
            features=features,
            stratified=stratified,
            normalise=normalise,
            checkpoint_every=checkpoint_every,
            log_every=log_every,
        )
        out.mkdir(parents=True, exist_ok=True)
        store = build_blocks([load_grid(p) for p in areas], cfg)
        model, history = train_model(store, cfg, checkpoint_dir=out)

        model_path = out / AppConstants.FILE_MODEL
        loss_path = out / AppConstants.FILE_LOSS_HISTORY
        save_model(model, model_path)
        write_loss_history(history, loss_path)
        write_run_manifest(
            out, "train", cfg.model_dump(mode="json"),
            {f"area{i}": str(p) for i, p in enumerate(areas)},
            {"model": str(model_path), "loss_history": str(loss_path)},
            started, seed=seed,
        )


def reconstruct(
    ctx: typer.Context,
    model_path: Path = typer.Option(..., "--model", help="Model file written by train"),
    input_path: Path = typer.Option(..., "--in", help="Low-resolution grid"),
    factor: int = typer.Option(..., "--factor", help="Power of two >= 2"),
    out: Path = typer.Option(..., "--out", help="Output grid"),
    block: int = typer.Option(settings.INFER_BLOCK, "--block", help="Tile edge (input cells)"),
    overlap: int = typer.Option(settings.INFER_OVERLAP, "--overlap", help="Tile overlap (input cells)"),
):
    """Super-resolve a grid with a trained model"""
    started = utcnow()
    with cli_errors():
        out_dir = parent_dir(out)
        model = load_model(model_path)
        result = reconstruct_grid(load_grid(input_path), model, factor, block, overlap, threads=threads(ctx))
        save_grid(result, out)
        write_run_manifest(
            out_dir, "reconstruct",
            {"factor": factor, "block": block, "overlap": overlap, "threads": threads(ctx)},
            {"model": str(model_path), "grid": str(input_path)},
            {"grid": str(out)},
            started,
        )


def register(cli: typer.Typer) -> None:
    cli.command("train")(train)
    cli.command("reconstruct")(reconstruct)
