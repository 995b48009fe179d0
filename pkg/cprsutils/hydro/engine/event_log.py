from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Iterator, Union

from cprsutils.hydro.io.atomic_write import NdjsonWriter
from cprsutils.lattice.core import Configuration

from .events import EventRecord


class EventLogObserver:
    """NDJSON event log: {t, kind, site|bond, from, to} per reported event."""

    def __init__(self, path: Union[str, Path]):
        self._writer = NdjsonWriter(path)

    @property
    def path(self) -> Path:
        return self._writer.path

    def on_start(self, t: float, config: Configuration) -> None:
        pass

    def on_event(self, event: EventRecord, before: Configuration) -> None:
        self._writer.write(event.to_dict())

    def on_finish(self, t: float, config: Configuration) -> None:
        self._writer.close()

    def abort(self) -> None:
        self._writer.abort()


def read_event_log(path: Union[str, Path]) -> Iterator[Dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)
