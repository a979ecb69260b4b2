"""structlog setup shared by the CLI and scripts.

Library modules only call structlog.get_logger(); output format and level are
decided once here from settings.
"""

from __future__ import annotations

import logging
import sys

import structlog

from costtest.config import settings

# logging.getLevelNamesMapping() is Python 3.11+; on older versions use the same mapping.
_level_names_mapping = getattr(
    logging, "getLevelNamesMapping", lambda: dict(logging._nameToLevel)
)


def configure_logging(level: str | None = None, json: bool | None = None) -> None:
    """Route structlog events to stderr at the configured level."""
    level_name = (level or settings.LOG_LEVEL).upper()
    use_json = settings.LOG_JSON if json is None else json

    renderer = (
        structlog.processors.JSONRenderer()
        if use_json
        else structlog.dev.ConsoleRenderer(colors=False)
    )

    structlog.configure(
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(
            _level_names_mapping().get(level_name, logging.INFO)
        ),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )
