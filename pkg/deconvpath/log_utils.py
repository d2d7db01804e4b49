"""Logging setup shared by the CLI and the benchmark workers."""
import os
import logging

from rich.console import Console
from rich.logging import RichHandler

LOG_ENV_VAR = "DECONV_LOG"


def resolve_level(level=None):
    """Turn a level name (or DECONV_LOG) into a logging level, WARNING by default."""
    name = level or os.environ.get(LOG_ENV_VAR) or "WARNING"
    if isinstance(name, int):
        return name
    resolved = logging.getLevelName(str(name).upper())
    return resolved if isinstance(resolved, int) else logging.WARNING


def setup_logging(level=None):
    """Attach a rich stderr handler to the ``deconvpath`` logger (idempotent)."""
    logger = logging.getLogger("deconvpath")
    logger.setLevel(resolve_level(level))
    if not any(isinstance(h, RichHandler) for h in logger.handlers):
        handler = RichHandler(console=Console(stderr=True), show_path=False, markup=False)
        handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
        logger.addHandler(handler)
    logger.propagate = False
    return logger
