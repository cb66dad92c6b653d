import sys
from typing import Optional, Sequence

import click
import typer

from app.core.config import settings
from app.core.logging import configure_logging
from app.routes import data, evaluation, model, reports

cli = typer.Typer(
    name="urbandem",
    help="Urban DEM super-resolution: synthesis, baselines, training, reconstruction and evaluation",
    no_args_is_help=True,
    add_completion=False,
    pretty_exceptions_enable=False,
)


@cli.callback()
def main_options(
    ctx: typer.Context,
    threads: int = typer.Option(settings.THREADS, "--threads", min=1, help="Worker threads for tiles and IDW"),
    log_level: str = typer.Option(settings.LOG_LEVEL, "--log-level", help="DEBUG, INFO, WARNING or ERROR"),
):
    configure_logging(log_level)
    ctx.obj = {"threads": threads}


# Register command groups
data.register(cli)
model.register(cli)
evaluation.register(cli)
reports.register(cli)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Execute one command and return its exit status: 0 on success, 1 on a
    domain or I/O failure, 2 on a usage error.
    """
    command = typer.main.get_command(cli)
    try:
        rv = command.main(args=list(argv) if argv is not None else None, prog_name="urbandem", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        typer.echo("Aborted", err=True)
        return 1
    return rv if isinstance(rv, int) else 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
