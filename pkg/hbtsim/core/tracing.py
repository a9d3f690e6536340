"""Run tracing utilities: run ids, trace metadata and step timing via logging."""

import functools
import hashlib
import logging
import sys
import time
import uuid
from datetime import datetime, timezone
from typing import Any, Callable, TypeVar

import numpy as np

from hbtsim.core.config import settings

logger = logging.getLogger("hbtsim.trace")

F = TypeVar("F", bound=Callable[..., Any])

_LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def configure_logging(level: str | None = None) -> None:
    """
    Install a single stderr handler on the ``hbtsim`` logger.

    Args:
        level: Log level name (defaults to settings.log_level)
    """
    root = logging.getLogger("hbtsim")
    root.setLevel((level or settings.log_level).upper())
    if not any(getattr(h, "_hbtsim", False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(_LOG_FORMAT))
        handler._hbtsim = True  # type: ignore[attr-defined]
        root.addHandler(handler)


def generate_run_id() -> str:
    """Generate a unique run ID for trace correlation."""
    return str(uuid.uuid4())


def fingerprint(text: str) -> str:
    """Short stable digest of a canonical configuration string."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def get_trace_metadata() -> dict[str, Any]:
    """
    Get standard metadata to attach to every run summary.

    Returns:
        Dictionary of metadata fields
    """
    return {
        "environment": settings.environment,
        "app_version": settings.app_version,
        "numpy_version": np.__version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def trace_step(step_name: str) -> Callable[[F], F]:
    """
    Decorator that logs the duration and outcome of a pipeline step.

    Usage:
        @trace_step("simulate")
        def simulate(config):
            ...

    Args:
        step_name: Name of the step for the log line

    Returns:
        Decorated function
    """
    def decorator(func: F) -> F:
        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            start = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except Exception as exc:
                logger.debug(
                    "step %s failed after %.3fs: %s",
                    step_name, time.perf_counter() - start, type(exc).__name__,
                )
                raise
            logger.debug("step %s done in %.3fs", step_name, time.perf_counter() - start)
            return result

        return wrapper  # type: ignore[return-value]

    return decorator


class TracingContext:
    """
    Context class for managing trace state across one command.

    Usage:
        with TracingContext("simulate", config_fingerprint=fp) as ctx:
            series = simulate(config)
            ctx.add_metadata("M", series.m)
    """

    def __init__(self, command: str, config_fingerprint: str | None = None):
        self.command = command
        self.config_fingerprint = config_fingerprint
        self.run_id = generate_run_id()
        self.metadata: dict[str, Any] = {}
        self.start_time = datetime.now(timezone.utc)

    def add_metadata(self, key: str, value: Any) -> None:
        """Add metadata to the current trace context."""
        self.metadata[key] = value

    def get_context(self) -> dict[str, Any]:
        """Get the full trace context."""
        return {
            "run_id": self.run_id,
            "command": self.command,
            "config_fingerprint": self.config_fingerprint,
            "start_time": self.start_time.isoformat(),
            **get_trace_metadata(),
            **self.metadata,
        }

    def __enter__(self) -> "TracingContext":
        logger.info("run %s: %s started", self.run_id, self.command)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.metadata["duration_seconds"] = (
            datetime.now(timezone.utc) - self.start_time
        ).total_seconds()
        self.metadata["success"] = exc_type is None

        if exc_type:
            self.metadata["error_type"] = exc_type.__name__
            self.metadata["error_message"] = str(exc_val)
            logger.info("run %s: %s failed (%s)", self.run_id, self.command, exc_type.__name__)
        else:
            logger.info(
                "run %s: %s finished in %.3fs",
                self.run_id, self.command, self.metadata["duration_seconds"],
            )
