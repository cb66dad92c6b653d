from enum import Enum
from pathlib import Path

import typer

from app.core.config import settings
from app.routes.common import cli_errors, parent_dir, threads
from app.schemas.synth import SynthConfig
from app.services.interp_service import upsample as upsample_grid
from app.services.raster_service import downsample_nn, load_grid, save_grid
from app.services.report_service import utcnow, write_run_manifest
from app.services.synth_service import generate_scene, write_scene


class UpsampleMethod(str, Enum):
    nn = "nn"
    bi = "bi"
    cc = "cc"
    idw = "idw"


def synth(
    out: Path = typer.Option(..., "--out", help="Output directory"),
    size: int = typer.Option(256, "--size", help="Scene edge in cells"),
    cell_size: float = typer.Option(0.5, "--cell-size", help="Cell size (m)"),
    seed: int = typer.Option(settings.DEFAULT_SEED, "--seed"),
    building_density: float = typer.Option(0.3, "--building-density"),
    road_spacing: float = typer.Option(40.0, "--road-spacing", help="Road spacing (m)"),
    road_width: float = typer.Option(6.0, "--road-width", help="Road width (m)"),
    terrain_amplitude: float = typer.Option(4.0, "--terrain-amplitude", help="Base terrain amplitude (m)"),
    vegetation_noise: float = typer.Option(0.0, "--vegetation-noise", help="Noise std on natural cells (m)"),
):
    """Generate a synthetic urban scene (DEM, land cover, roads, buildings)"""
    started = utcnow()
    with cli_errors():
        cfg = SynthConfig(
            size=size,
            cell_size=cell_size,
            seed=seed,
            building_density=building_density,
            road_spacing=road_spacing,
            road_width=road_width,
            terrain_amplitude=terrain_amplitude,
            vegetation_noise=vegetation_noise,
        )
        outputs = write_scene(generate_scene(cfg), out)
        write_run_manifest(out, "synth", cfg.model_dump(mode="json"), {}, outputs, started, seed=seed)


def downsample(
    input_path: Path = typer.Option(..., "--in", help="High-resolution ESRI ASCII grid"),
    factor: int = typer.Option(..., "--factor", help="Power of two >= 2"),
    out: Path = typer.Option(..., "--out", help="Output grid"),
):
    """Coarsen a grid by centre-offset nearest-neighbour decimation"""
    started = utcnow()
    with cli_errors():
        out_dir = parent_dir(out)
        save_grid(downsample_nn(load_grid(input_path), factor), out)
        write_run_manifest(
            out_dir, "downsample", {"factor": factor},
            {"grid": str(input_path)}, {"grid": str(out)}, started,
        )


def upsample(
    ctx: typer.Context,
    method: UpsampleMethod = typer.Option(..., "--method", help="nn, bi, cc or idw"),
    factor: int = typer.Option(..., "--factor", help="Power of two >= 2"),
    input_path: Path = typer.Option(..., "--in", help="Low-resolution grid"),
    out: Path = typer.Option(..., "--out", help="Output grid"),
    idw_power: float = typer.Option(settings.IDW_POWER, "--idw-power"),
    idw_neighbours: int = typer.Option(settings.IDW_NEIGHBOURS, "--idw-neighbours"),
    bicubic_a: float = typer.Option(settings.BICUBIC_A, "--bicubic-a"),
):
    """Upsample a grid with a classical interpolation baseline"""
    started = utcnow()
    with cli_errors():
        out_dir = parent_dir(out)
        result = upsample_grid(
            load_grid(input_path), method.value, factor,
            a=bicubic_a, power=idw_power, k=idw_neighbours, workers=threads(ctx),
        )
        save_grid(result, out)
        config = {
            "method": method.value,
            "factor": factor,
            "idw_power": idw_power,
            "idw_neighbours": idw_neighbours,
            "bicubic_a": bicubic_a,
        }
        write_run_manifest(out_dir, "upsample", config, {"grid": str(input_path)}, {"grid": str(out)}, started)


def register(cli: typer.Typer) -> None:
    cli.command("synth")(synth)
    cli.command("downsample")(downsample)
    cli.command("upsample")(upsample)
