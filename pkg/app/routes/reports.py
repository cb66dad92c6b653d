from pathlib import Path
from typing import List

import typer

from app.routes.common import cli_errors
from app.services.report_service import merge_reports, utcnow, write_run_manifest


def report(
    inputs: List[Path] = typer.Option(..., "--input", help="Evaluation JSON written by an eval command (repeatable)"),
    out: Path = typer.Option(..., "--out", help="Output directory"),
    baseline: str = typer.Option("bi", "--baseline", help="Method the improvement columns compare against"),
):
    """Merge evaluation records into plot-ready CSV tables"""
    started = utcnow()
    with cli_errors():
        written = merge_reports(inputs, out, baseline=baseline or None)
        write_run_manifest(
            out, "report", {"baseline": baseline},
            {f"input{i}": str(p) for i, p in enumerate(inputs)}, written, started,
        )


def register(cli: typer.Typer) -> None:
    cli.command("report")(report)
