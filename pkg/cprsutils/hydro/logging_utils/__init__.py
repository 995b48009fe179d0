from __future__ import annotations

import logging
import os
from typing import Any

_ROOT = "cprsutils"
_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
_configured = False


def configure_logging(level: int | str | None = None) -> None:
    """
    Attach a single stream handler to the package logger.

    Level resolution: explicit argument, then CPRS_LOG_LEVEL, then WARNING.
    Repeated calls only adjust the level.
    """
    global _configured
    if level is None:
        level = os.environ.get("CPRS_LOG_LEVEL", "WARNING")
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.WARNING

    root = logging.getLogger(_ROOT)
    root.setLevel(level)
    if not _configured:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(_FORMAT))
        root.addHandler(handler)
        root.propagate = False
        _configured = True


def get_logger(name: str) -> logging.Logger:
    if not name.startswith(_ROOT):
        name = f"{_ROOT}.{name}"
    return logging.getLogger(name)


def kv(event: str, **fields: Any) -> str:
    """'event k1=v1 k2=v2' with floats shortened."""
    parts = [event]
    for k, v in fields.items():
        if isinstance(v, float):
            v = f"{v:.6g}"
        parts.append(f"{k}={v}")
    return " ".join(parts)
