# cprsutils/hydro/engine/events.py
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Literal, Protocol

from cprsutils.hydro.errors import AssertionFailure, InconsistentEventError
from cprsutils.lattice.core import Configuration, occupancy_counts

EventKind = Literal["exchange", "reaction", "boundary"]


@dataclass
class SimClock:
    t: float = 0.0
    event_count: int = 0


@dataclass(frozen=True, slots=True)
class EventRecord:
    """
    One applied state change.

    exchange: site/other are the bond endpoints (x, x+e_j), bond is the
      bond index, from_state/to_state are the states at site/other before
      the swap.
    reaction, boundary: site changes from_state -> to_state; other = bond = -1.
    """
    kind: EventKind
    time: float
    site: int
    from_state: int
    to_state: int
    other: int = -1
    bond: int = -1

    def to_dict(self) -> Dict[str, Any]:
        d: Dict[str, Any] = {"t": self.time, "kind": self.kind}
        if self.kind == "exchange":
            d["bond"] = self.bond
            d["site"] = self.site
            d["other"] = self.other
        else:
            d["site"] = self.site
        d["from"] = self.from_state
        d["to"] = self.to_state
        return d


class EventObserver(Protocol):
    """
    Synchronous hooks. on_event is called BEFORE the event is applied, so
    `before` is the live pre-event configuration (read-only for observers).
    """

    def on_start(self, t: float, config: Configuration) -> None:
        ...

    def on_event(self, event: EventRecord, before: Configuration) -> None:
        ...

    def on_finish(self, t: float, config: Configuration) -> None:
        ...


def check_event(event: EventRecord, before: Configuration) -> None:
    states = before.states
    if event.kind == "exchange":
        if states[event.site] != event.from_state or states[event.other] != event.to_state:
            raise InconsistentEventError(f"exchange record does not match configuration: {event}")
        if event.other not in before.geometry.neighbor_table[event.site]:
            raise InconsistentEventError(f"exchange across a non-bond: {event}")
        return
    if event.from_state == event.to_state:
        raise InconsistentEventError(f"{event.kind} record without a state change: {event}")
    if states[event.site] != event.from_state:
        raise InconsistentEventError(
            f"{event.kind} at site {event.site} expects state {event.from_state}, found {states[event.site]}"
        )
    if event.kind == "boundary" and not before.geometry.is_boundary(event.site):
        raise InconsistentEventError(f"boundary event at interior site: {event}")


class CountsChecker:
    """
    Debug observer: keeps per-type counts from the event stream, checks every
    record against the configuration it is applied to, and compares the
    running tally with a full recount every `every` events and at the end.
    """

    def __init__(self, every: int = 1):
        self.every = max(1, every)
        self.counts: list[int] = [0, 0, 0, 0]
        self.seen = 0
        self.exchange_moves = 0

    def on_start(self, t: float, config: Configuration) -> None:
        self.counts = list(occupancy_counts(config))

    def on_event(self, event: EventRecord, before: Configuration) -> None:
        check_event(event, before)
        if self.seen % self.every == 0 and tuple(self.counts) != occupancy_counts(before):
            raise AssertionFailure(f"occupancy counts drifted before event {self.seen}: {self.counts}")
        if event.kind == "exchange":
            self.exchange_moves += 1
        else:
            self.counts[event.from_state] -= 1
            self.counts[event.to_state] += 1
        self.seen += 1

    def on_finish(self, t: float, config: Configuration) -> None:
        if tuple(self.counts) != occupancy_counts(config):
            raise AssertionFailure(f"final occupancy counts {occupancy_counts(config)} != tally {self.counts}")
