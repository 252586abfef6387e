"""
Logging setup for the mtextremal toolkit.
"""

import logging
import logging.handlers
import os
import sys
from pathlib import Path
from typing import Optional


def default_log_dir() -> Path:
    """
    Get the default log directory.

    Returns:
        Path: ``$XDG_DATA_HOME/mtextremal/logs`` on POSIX, ``~/.mtextremal/logs`` elsewhere.
    """
    if os.name == "posix":
        xdg_data = os.environ.get("XDG_DATA_HOME")
        base = Path(xdg_data) if xdg_data else Path.home() / ".local" / "share"
        return base / "mtextremal" / "logs"
    return Path.home() / ".mtextremal" / "logs"


def setup_logging(
    log_level: str = "INFO",
    log_file: Optional[Path] = None,
    console_output: bool = True
) -> None:
    """
    Set up logging with a console handler and a rotating file handler.

    Console output goes to stderr so that result tables on stdout stay clean.

    Args:
        log_level: Logging level ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL').
        log_file: Path to log file. If None, uses the default location.
        console_output: Whether to output logs to the console.
    """
    numeric_level = getattr(logging, log_level.upper(), logging.INFO)

    logger = logging.getLogger("mtextremal")
    logger.setLevel(numeric_level)
    logger.handlers.clear()

    formatter = logging.Formatter(
        fmt="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S"
    )

    if console_output:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(numeric_level)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

    if log_file is None:
        log_dir = default_log_dir()
        log_dir.mkdir(parents=True, exist_ok=True)
        log_file = log_dir / "mtextremal.log"
    else:
        log_file.parent.mkdir(parents=True, exist_ok=True)

    # Rotating file handler (max 10MB, keep 5 backups)
    file_handler = logging.handlers.RotatingFileHandler(
        filename=log_file,
        maxBytes=10 * 1024 * 1024,
        backupCount=5,
        encoding="utf-8"
    )
    file_handler.setLevel(numeric_level)
    file_handler.setFormatter(formatter)
    logger.addHandler(file_handler)

    logger.debug(f"Logging initialized at level {log_level}, file {log_file}")


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance for a specific module.

    Args:
        name: Logger name (typically __name__).

    Returns:
        logging.Logger: Logger instance.
    """
    if name.startswith("mtextremal."):
        name = name[len("mtextremal."):]
    return logging.getLogger(f"mtextremal.{name}")
