import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Optional

import typer
from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import DemSrError

logger = logging.getLogger(__name__)


@contextmanager
def cli_errors() -> Iterator[None]:
    """
    Turn domain, validation and I/O failures into a one-line diagnostic on
    stderr and exit status 1.
    """
    try:
        yield
    except DemSrError as e:
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(code=1)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first.get("loc", ())) or e.title
        typer.echo(f"error: invalid {where}: {first['msg']}", err=True)
        raise typer.Exit(code=1)
    except OSError as e:
        typer.echo(f"error: {e.strerror or e} ({e.filename})" if e.filename else f"error: {e}", err=True)
        raise typer.Exit(code=1)


def threads(ctx: typer.Context) -> int:
    obj = ctx.find_root().obj or {}
    return obj.get("threads", settings.THREADS)


def parent_dir(path: Path) -> Path:
    parent = path.resolve().parent
    parent.mkdir(parents=True, exist_ok=True)
    return parent


def parse_int_list(value: Optional[str]) -> Optional[List[int]]:
    if value is None:
        return None
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise typer.BadParameter(f"expected comma-separated integers, got {value!r}")


def parse_float_list(value: Optional[str]) -> Optional[List[float]]:
    if value is None:
        return None
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise typer.BadParameter(f"expected comma-separated numbers, got {value!r}")
