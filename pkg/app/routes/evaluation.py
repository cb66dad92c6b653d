from enum import Enum
from pathlib import Path
from typing import Optional

import typer

from app.core.config import settings
from app.core.settings import AppConstants
from app.routes.common import cli_errors, parent_dir, parse_float_list, parse_int_list
from app.services.morph_eval_service import building_boundary_report, road_profile_report
from app.services.numeric_eval_service import error_stats, landcover_binned_stats, slope_binned_stats
from app.services.raster_service import compute_slope, load_grid
from app.services.report_service import make_record, utcnow, write_json, write_run_manifest
from app.services.vector_service import load_buildings, load_roads


class Sampling(str, Enum):
    nearest = "nearest"
    bilinear = "bilinear"


class Thinning(str, Enum):
    zhang = "zhang"
    lee = "lee"


def _finish(kind, method, recon, ref, report, out: Path, config: dict, inputs: dict, started) -> None:
    out_dir = parent_dir(out)
    write_json(make_record(kind, method, str(recon), str(ref), report), out)
    write_run_manifest(out_dir, f"eval-{kind}", {"method": method, **config}, inputs, {"report": str(out)}, started)


def eval_numeric(
    recon: Path = typer.Option(..., "--recon", help="Reconstructed grid"),
    ref: Path = typer.Option(..., "--ref", help="Reference grid"),
    out: Path = typer.Option(..., "--out", help="Report JSON"),
    method: str = typer.Option("recon", "--method", help="Label for this reconstruction"),
):
    """MAE, RMSE and error STD over all valid cells"""
    started = utcnow()
    with cli_errors():
        report = error_stats(load_grid(recon), load_grid(ref))
        _finish(AppConstants.REPORT_NUMERIC, method, recon, ref, report, out, {},
                {"recon": str(recon), "ref": str(ref)}, started)


def eval_slope(
    recon: Path = typer.Option(..., "--recon"),
    ref: Path = typer.Option(..., "--ref"),
    out: Path = typer.Option(..., "--out"),
    slope: Optional[Path] = typer.Option(None, "--slope", help="Slope grid (%); derived from --ref when omitted"),
    edges: Optional[str] = typer.Option(None, "--edges", help="Comma-separated slope edges (%)"),
    method: str = typer.Option("recon", "--method"),
):
    """Error statistics per slope range"""
    started = utcnow()
    edge_list = parse_float_list(edges)
    with cli_errors():
        ref_grid = load_grid(ref)
        slope_grid = load_grid(slope) if slope else compute_slope(ref_grid)
        report = slope_binned_stats(load_grid(recon), ref_grid, slope_grid, edge_list)
        inputs = {"recon": str(recon), "ref": str(ref)}
        if slope:
            inputs["slope"] = str(slope)
        _finish(AppConstants.REPORT_SLOPE, method, recon, ref, report, out,
                {"edges": edge_list or [str(e) for e in AppConstants.SLOPE_EDGES]}, inputs, started)


def eval_landcover(
    recon: Path = typer.Option(..., "--recon"),
    ref: Path = typer.Option(..., "--ref"),
    landcover: Path = typer.Option(..., "--landcover", help="Grid of land-cover codes 1-5"),
    out: Path = typer.Option(..., "--out"),
    method: str = typer.Option("recon", "--method"),
):
    """Error statistics per land-cover class"""
    started = utcnow()
    with cli_errors():
        report = landcover_binned_stats(load_grid(recon), load_grid(ref), load_grid(landcover))
        _finish(AppConstants.REPORT_LANDCOVER, method, recon, ref, report, out, {},
                {"recon": str(recon), "ref": str(ref), "landcover": str(landcover)}, started)


def eval_roads(
    recon: Path = typer.Option(..., "--recon"),
    ref: Path = typer.Option(..., "--ref"),
    roads: Path = typer.Option(..., "--roads", help="GeoJSON LineString centrelines"),
    out: Path = typer.Option(..., "--out"),
    sampling: Sampling = typer.Option(Sampling(settings.PROFILE_SAMPLING), "--sampling"),
    method: str = typer.Option("recon", "--method"),
):
    """Pearson correlation of road-centreline profiles"""
    started = utcnow()
    with cli_errors():
        report = road_profile_report(load_grid(recon), load_grid(ref), load_roads(roads), sampling.value)
        _finish(AppConstants.REPORT_ROADS, method, recon, ref, report, out, {"sampling": sampling.value},
                {"recon": str(recon), "ref": str(ref), "roads": str(roads)}, started)


def eval_buildings(
    recon: Path = typer.Option(..., "--recon"),
    buildings: Path = typer.Option(..., "--buildings", help="GeoJSON Polygon footprints"),
    out: Path = typer.Option(..., "--out"),
    edge_threshold: float = typer.Option(settings.EDGE_THRESHOLD, "--edge-threshold"),
    min_area: float = typer.Option(settings.MIN_BUILDING_AREA, "--min-area", help="Footprint area threshold (m²)"),
    buffers: Optional[str] = typer.Option(None, "--buffers", help="Comma-separated buffer widths (cells)"),
    thinning: Thinning = typer.Option(Thinning(settings.THINNING_METHOD), "--thinning"),
    method: str = typer.Option("recon", "--method"),
):
    """Share of footprint boundary cells recovered from the DEM"""
    started = utcnow()
    buffer_list = parse_int_list(buffers)
    with cli_errors():
        report = building_boundary_report(
            load_grid(recon), load_buildings(buildings),
            edge_threshold=edge_threshold, min_area=min_area, buffers=buffer_list, method=thinning.value,
        )
        config = {
            "edge_threshold": edge_threshold,
            "min_area": min_area,
            "buffers": buffer_list or settings.BOUNDARY_BUFFERS,
            "thinning": thinning.value,
        }
        _finish(AppConstants.REPORT_BUILDINGS, method, recon, buildings, report, out, config,
                {"recon": str(recon), "buildings": str(buildings)}, started)


def register(cli: typer.Typer) -> None:
    cli.command("eval-numeric")(eval_numeric)
    cli.command("eval-slope")(eval_slope)
    cli.command("eval-landcover")(eval_landcover)
    cli.command("eval-roads")(eval_roads)
    cli.command("eval-buildings")(eval_buildings)
