"""
LOFT v1.0 - Centralized Logger
Provides a pre-configured logger for all modules.
"""

import logging
import sys
from pathlib import Path

_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)-20s | %(message)s"
_DATEFMT = "%Y-%m-%d %H:%M:%S"

_DEFAULT_LOG_FILE = Path(__file__).resolve().parent.parent / "logs" / "loft.log"

# Shared by every logger handed out; configure_logging() rewires it.
_settings = {
    "level": logging.INFO,
    "file": _DEFAULT_LOG_FILE,
}
_issued: list[logging.Logger] = []


def _build_handlers(level: int, log_file: Path | None) -> list[logging.Handler]:
    formatter = logging.Formatter(fmt=_FORMAT, datefmt=_DATEFMT)

    # --- Console Handler ---
    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    handlers: list[logging.Handler] = [console_handler]

    # --- File Handler ---
    if log_file is not None:
        try:
            log_file.parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.FileHandler(log_file, encoding="utf-8")
            file_handler.setLevel(logging.DEBUG)
            file_handler.setFormatter(formatter)
            handlers.append(file_handler)
        except OSError as exc:
            sys.stderr.write(f"File logging disabled ({log_file}): {exc}\n")

    return handlers


def get_logger(name: str, level: int | None = None) -> logging.Logger:
    """
    Returns a named logger with console and file handlers.

    Args:
        name: Module name (typically __name__).
        level: Logging level (default: the configured level, INFO).

    Returns:
        Configured logging.Logger instance.
    """
    logger = logging.getLogger(name)

    # Avoid adding handlers if they already exist (e.g. on reimport)
    if logger.handlers:
        return logger

    level = _settings["level"] if level is None else level
    logger.setLevel(min(level, logging.DEBUG) if _settings["file"] else level)
    logger.propagate = False
    for handler in _build_handlers(level, _settings["file"]):
        logger.addHandler(handler)

    _issued.append(logger)
    return logger


def configure_logging(level: str | int = "INFO", log_file: str | Path | None = _DEFAULT_LOG_FILE) -> None:
    """
    Apply the ``logging`` section of the run configuration.

    Rebuilds the handlers of every logger already issued, so modules that
    grabbed their logger at import time follow the new settings.

    Args:
        level: Level name ("DEBUG", "INFO", ...) or numeric level.
        log_file: Log file path, or None to log to the console only.
    """
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO

    _settings["level"] = level
    _settings["file"] = Path(log_file) if log_file else None

    for logger in _issued:
        for handler in list(logger.handlers):
            logger.removeHandler(handler)
            handler.close()
        logger.setLevel(min(level, logging.DEBUG) if _settings["file"] else level)
        for handler in _build_handlers(level, _settings["file"]):
            logger.addHandler(handler)
