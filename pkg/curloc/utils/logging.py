import os
import logging
import typing
from logging.handlers import RotatingFileHandler

from rich.console import Console
from rich.logging import RichHandler


EVENTS_LEVEL_NUM = 38
DEFAULT_LOG_BACKUP_COUNT = 10
DEFAULT_EVENTS_RETENTION_SIZE = 5 * 1024 * 1024
EVENTS_FILE_NAME = "events.log"

console = Console(stderr=True)


def setup_events_logger(
    full_path: str,
    events_retention_size: int = DEFAULT_EVENTS_RETENTION_SIZE,
) -> logging.Logger:
    """
    Route EVENT-level records of the "event" logger to
    <full_path>/events.log. A previous events file handler is closed first,
    so each run directory gets its own log.
    """
    logging.addLevelName(EVENTS_LEVEL_NUM, "EVENT")

    logger = logging.getLogger("event")
    logger.setLevel(EVENTS_LEVEL_NUM)
    logger.propagate = False

    def event(
        self: logging.Logger,
        message: str,
        *args: typing.Any,
        **kws: typing.Any,
    ) -> None:
        if self.isEnabledFor(EVENTS_LEVEL_NUM):
            self._log(EVENTS_LEVEL_NUM, message, args, **kws)

    logging.Logger.event = event  # type: ignore[attr-defined]

    for handler in list(logger.handlers):
        if isinstance(handler, RotatingFileHandler):
            logger.removeHandler(handler)
            handler.close()

    formatter = logging.Formatter(
        "%(asctime)s | %(levelname)s | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    os.makedirs(full_path, exist_ok=True)
    file_handler = RotatingFileHandler(
        os.path.join(full_path, EVENTS_FILE_NAME),
        maxBytes=events_retention_size,
        backupCount=DEFAULT_LOG_BACKUP_COUNT,
    )
    file_handler.setFormatter(formatter)
    file_handler.setLevel(EVENTS_LEVEL_NUM)
    logger.addHandler(file_handler)

    return logger


def close_events_logger() -> None:
    logger = logging.getLogger("event")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()


def setup_console_logging(level: str = "INFO") -> None:
    """Rich console output for the curloc loggers."""
    handler = RichHandler(console=console, show_path=False)
    handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))

    root = logging.getLogger("curloc")
    for existing in list(root.handlers):
        if isinstance(existing, RichHandler):
            root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(level.upper())


class SubstringFilter(logging.Filter):
    def __init__(self, forbidden: str):
        super().__init__()
        self.forbidden = forbidden

    def filter(self, record: logging.LogRecord) -> bool:
        # keep only those records whose formatted message does *not* contain the substring
        return self.forbidden not in record.getMessage()


def setup_log_filter(forbidden_substring: str, name: str = "curloc") -> None:
    # logger filters skip records propagated from child loggers
    for handler in logging.getLogger(name).handlers:
        handler.addFilter(SubstringFilter(forbidden_substring))
