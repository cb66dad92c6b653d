import logging
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

from app.core.config import settings

_HANDLER_NAME = "urbandem-rich"


def configure_logging(level: Optional[str] = None) -> None:
    """
    Install a single rich handler on the ``app`` logger.

    Output goes to stdout; stderr is reserved for failure diagnostics.
    """
    level = (level or settings.LOG_LEVEL).upper()
    root = logging.getLogger("app")
    root.setLevel(level)

    for handler in root.handlers:
        if handler.get_name() == _HANDLER_NAME:
            handler.setLevel(level)
            return

    handler = RichHandler(
        console=Console(stderr=False),
        show_path=False,
        rich_tracebacks=False,
    )
    handler.set_name(_HANDLER_NAME)
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter("%(message)s"))
    root.addHandler(handler)
    root.propagate = False
