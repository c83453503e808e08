import functools
import logging
import os
import time
from pathlib import Path
from typing import Callable, Optional

from rich.console import Console
from rich.logging import RichHandler
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn

LOG_LEVEL_MAP = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warning": logging.WARNING,
    "error": logging.ERROR,
    "critical": logging.CRITICAL,
}

LOG_DIR = Path(__file__).parent.parent.parent.parent / ".logs"
FILE_FORMAT = "%(asctime)s %(levelname)-8s %(name)s: %(message)s"
DATE_FORMAT = "[%Y-%m-%d %H:%M:%S]"

# stdout carries command output (gradcheck rows, PASS), so diagnostics go to stderr
_console = Console(stderr=True, force_terminal=False)


def env_level() -> int:
    return LOG_LEVEL_MAP.get(os.getenv("LOG_LEVEL", "info").lower(), logging.INFO)


def env_save_logs() -> bool:
    return os.getenv("DEIG_SAVE_LOGS", "false").lower() == "true"


def get_logger(name: str, level: Optional[str] = None, save_log_file: Optional[bool] = None) -> logging.Logger:
    """
    Get a logger with a rich console handler.

    Args:
        name: Logger name, usually ``__name__``
        level: debug/info/warning/error/critical (default: LOG_LEVEL, else info)
        save_log_file: Also append to .logs/<name>.log (default: DEIG_SAVE_LOGS)

    Returns:
        Configured logger; calling again with the same name reconfigures it
    """
    resolved = LOG_LEVEL_MAP.get(level.lower(), logging.INFO) if level else env_level()
    logger = logging.getLogger(name)
    logger.setLevel(resolved)
    logger.propagate = False
    logger.handlers = []

    console = RichHandler(console=_console, show_path=False, markup=False, rich_tracebacks=True)
    console.setFormatter(logging.Formatter("%(message)s", datefmt=DATE_FORMAT))
    logger.addHandler(console)

    if env_save_logs() if save_log_file is None else save_log_file:
        LOG_DIR.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(LOG_DIR / f"{name}.log")
        handler.setFormatter(logging.Formatter(FILE_FORMAT, datefmt=DATE_FORMAT))
        logger.addHandler(handler)

    return logger


def progress_bar(disable: bool = False) -> Progress:
    """Transient step counter for training, sampling and bench loops."""
    return Progress(
        TextColumn("[cyan]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        TimeElapsedColumn(),
        console=_console,
        transient=True,
        disable=disable,
    )


def log_execution(logger: Optional[logging.Logger] = None) -> Callable:
    """
    Log start, completion and wall time of a long-running operation.

    Failures are logged with the traceback and re-raised; the exit code is
    decided by the command's error handler.
    """

    def decorator(func):
        log = logger or get_logger(func.__module__)

        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            started = time.perf_counter()
            log.info(f"{func.__qualname__} started")
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                log.error(f"{func.__qualname__} failed after {time.perf_counter() - started:.1f}s: {e}", exc_info=True)
                raise
            log.info(f"{func.__qualname__} finished in {time.perf_counter() - started:.1f}s")
            return result

        return wrapper

    return decorator
