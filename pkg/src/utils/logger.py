import logging
from typing import Optional

from pythonjsonlogger import jsonlogger

from src.config import Config

TEXT_FORMAT = "[%(asctime)s] %(levelname)s in %(module)s: %(message)s"
JSON_FORMAT = "%(asctime)s %(levelname)s %(module)s %(message)s"


def setup_logging(
    config: Optional[Config] = None,
    level: Optional[str] = None,
    fmt: Optional[str] = None,
) -> None:
    """Configure root logging for a run.

    Args:
        config: Source of LOG_LEVEL / LOG_FORMAT defaults.
        level: Overrides the configured level (e.g. from ``--log-level``).
        fmt: ``text`` or ``json``; overrides the configured format.
    """
    level_name = (level or (config.LOG_LEVEL if config else "INFO")).upper()
    fmt_name = fmt or (config.LOG_FORMAT if config else "text")

    handler = logging.StreamHandler()
    if fmt_name == "json":
        handler.setFormatter(jsonlogger.JsonFormatter(JSON_FORMAT))
    else:
        handler.setFormatter(logging.Formatter(TEXT_FORMAT))

    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        handlers=[handler],
        force=True,
    )
