"""Structured event logging.

Every record is a single JSON object carrying the event name, level, ISO timestamp, the emitting
thread id and any keys bound with `Logger.bind` or passed to the call. Setting
APPARELMOTION_DEV_LOG=1 switches to colored console lines; LOG_LEVEL sets the threshold.
"""
from contextlib import contextmanager
from dataclasses import dataclass
import logging
import os
from pathlib import Path
import sys
import threading
from typing import cast, Any, Callable, Dict, Generator, List, Tuple, Type

import structlog
from structlog.stdlib import BoundLogger, get_logger as get_bound_logger

from apparelmotion.core.json_encoder import json_encoder

DEV_LOG_ENV = "APPARELMOTION_DEV_LOG"
LOG_LEVEL_ENV = "LOG_LEVEL"

Processor = Callable[..., Any]


@dataclass(frozen=True)
class EventName:
    """Name of a log event.

    Args:
        name: name of this event
    """

    name: str


class LogEventMeta(type):
    """Turns every bare annotation of a BaseLogEvent subclass into an EventName of the same name,
    so that

        TrainEpochEnd: EventName

    reads as TrainEpochEnd = EventName("TrainEpochEnd").
    """

    def __new__(
        mcs, name: str, bases: Tuple[Type, ...], namespace: Dict[str, Any]
    ) -> "LogEventMeta":
        for annotation in namespace.get("__annotations__", []):
            namespace[annotation] = EventName(annotation)
        return cast(LogEventMeta, super().__new__(mcs, name, bases, namespace))


@dataclass(frozen=True)
class BaseLogEvent(metaclass=LogEventMeta):
    """Base class for LogEvent classes"""


class Singleton(type):
    """Metaclass whose classes hand out one shared instance."""

    _instances: Dict[Type[Any], Any] = {}

    def __call__(cls, *args: Any, **kwargs: Any) -> Any:
        if cls not in Singleton._instances:
            Singleton._instances[cls] = super().__call__(*args, **kwargs)
        return Singleton._instances[cls]


def _renderer(pretty: bool) -> Processor:
    if pretty:
        return structlog.dev.ConsoleRenderer(colors=True, force_colors=True)
    return structlog.processors.JSONRenderer(sort_keys=True, default=json_encoder)


def configure_structlog(pretty: bool) -> None:
    """Route structlog through the stdlib root logger with the apparelmotion processor chain."""
    processors: List[Processor] = [
        structlog.stdlib.add_log_level,
        structlog.stdlib.filter_by_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        _renderer(pretty),
    ]
    structlog.configure(
        logger_factory=structlog.stdlib.LoggerFactory(),
        processors=processors,  # type: ignore
    )
    logging.basicConfig(
        level=os.environ.get(LOG_LEVEL_ENV, "INFO"), stream=sys.stdout, format="%(message)s"
    )


class BaseLogger:
    """Event logger with a per-thread stack of bound contexts. In general use Logger, not
    BaseLogger directly.

    Args:
        log_tid: add the emitting thread id to every record
        pretty_output: render console lines instead of JSON
    """

    def __init__(self, log_tid: bool = True, pretty_output: bool = False) -> None:
        self._log_tid = log_tid
        self._local = threading.local()
        self.pretty_output = pretty_output or os.environ.get(DEV_LOG_ENV, "0") == "1"
        configure_structlog(self.pretty_output)

    def _stack(self) -> List[BoundLogger]:
        stack = getattr(self._local, "stack", None)
        if stack is None:
            root = get_bound_logger()
            if self._log_tid:
                root = root.bind(tid=threading.get_ident())
            stack = self._local.stack = [root]
        return stack

    def _emit(self, level: str, event: EventName, fields: Dict[str, Any]) -> None:
        getattr(self._stack()[-1], level)(event=event.name, **fields)

    def debug(self, event: EventName, **kwargs: Any) -> None:
        self._emit("debug", event, kwargs)

    def info(self, event: EventName, **kwargs: Any) -> None:
        self._emit("info", event, kwargs)

    def warning(self, event: EventName, **kwargs: Any) -> None:
        """Used for recoverable data problems, e.g. a skipped degenerate edge."""
        self._emit("warning", event, kwargs)

    def error(self, event: EventName, **kwargs: Any) -> None:
        self._emit("error", event, kwargs)

    @contextmanager
    def bind(self, **bindings: Any) -> Generator[None, None, None]:
        """Add bindings to every record emitted by this thread inside the with block."""
        stack = self._stack()
        stack.append(stack[-1].bind(**bindings))
        try:
            yield
        finally:
            stack.pop()

    @contextmanager
    def log_to_file(self, path: Path) -> Generator[None, None, None]:
        """Also append every record emitted inside the with block to the file at path, one
        rendered record per line."""
        path.parent.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(str(path), mode="a")
        handler.setFormatter(logging.Formatter("%(message)s"))
        root_logger = logging.getLogger()
        root_logger.addHandler(handler)
        try:
            yield
        finally:
            root_logger.removeHandler(handler)
            handler.close()


class Logger(BaseLogger, metaclass=Singleton):
    """Process-wide shared BaseLogger"""
