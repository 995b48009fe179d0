# cprsutils/hydro/measures/ledger.py
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np

from cprsutils.hydro.config.model_params import ModelParams
from cprsutils.hydro.engine.events import EventRecord, check_event
from cprsutils.hydro.errors import AssertionFailure, InconsistentEventError
from cprsutils.lattice.core import Configuration, Geometry

from .compensators import CompensatorTable, CompensatorTracker


def _indicators(config: Configuration) -> np.ndarray:
    """(n_sites, 3) int64 with column i-1 = eta_i."""
    arr = config.as_array()
    return np.stack([(arr == i) for i in (1, 2, 3)], axis=1).astype(np.int64)


@dataclass
class CurrentLedger:
    """
    W[b, i-1]: net number of type-i particles that crossed bond b = (x, x+e_j)
      in the +e_j direction.
    Q_bulk[x, i-1], Q_boundary[x, i-1]: type-i particles created minus
      annihilated at x by reaction and by reservoir events respectively.

    Used as an engine observer it applies every event and, when a
    CompensatorTracker is attached, integrates the matching compensators.
    With check_continuity set it asserts the discrete continuity identity at
    the touched sites after every event.
    """
    geometry: Geometry
    W: np.ndarray
    Q_bulk: np.ndarray
    Q_boundary: np.ndarray
    tracker: CompensatorTracker | None = None
    check_continuity: bool = False
    _checker: "ContinuityChecker | None" = field(default=None, repr=False)

    @classmethod
    def empty(
        cls,
        geometry: Geometry,
        params: ModelParams | None = None,
        *,
        check_continuity: bool = False,
    ) -> "CurrentLedger":
        nb, ns = len(geometry.bond_table), geometry.n_sites
        return cls(
            geometry=geometry,
            W=np.zeros((nb, 3), dtype=np.int64),
            Q_bulk=np.zeros((ns, 3), dtype=np.int64),
            Q_boundary=np.zeros((ns, 3), dtype=np.int64),
            tracker=CompensatorTracker(geometry, params) if params is not None else None,
            check_continuity=check_continuity,
        )

    # ------------------------
    # observer hooks

    def on_start(self, t: float, config: Configuration) -> None:
        if self.check_continuity:
            self._checker = ContinuityChecker(self, config)
        if self.tracker is not None:
            self.tracker.on_start(t, config)

    def on_event(self, event: EventRecord, before: Configuration) -> None:
        if self._checker is not None:
            self._checker.check_pending(before)
        if self.tracker is not None:
            self.tracker.on_event(event, before)
        ledger_apply(self, event, before)
        if self._checker is not None:
            self._checker.mark(event)

    def on_finish(self, t: float, config: Configuration) -> None:
        if self._checker is not None:
            self._checker.check_pending(config)
            self._checker.check_all(config)
        if self.tracker is not None:
            self.tracker.on_finish(t, config)

    # ------------------------

    def compensators(self, t: float) -> CompensatorTable:
        if self.tracker is None:
            raise RuntimeError("ledger was built without model parameters; no compensators tracked")
        return self.tracker.table(t)

    def martingales(self, t: float) -> Dict[str, np.ndarray]:
        tab = self.compensators(t)
        return {
            "W": self.W - tab.W_comp,
            "Q_bulk": self.Q_bulk - tab.Q_comp,
            "Q_boundary": self.Q_boundary - tab.B_comp,
        }

    def divergence(self) -> np.ndarray:
        """(n_sites, 3): net W inflow into each site."""
        div = np.zeros((self.geometry.n_sites, 3), dtype=np.int64)
        bonds = self.geometry.bond_table
        if bonds:
            xs = np.array([b[0] for b in bonds])
            ys = np.array([b[1] for b in bonds])
            np.add.at(div, ys, self.W)
            np.subtract.at(div, xs, self.W)
        return div


def ledger_apply(ledger: CurrentLedger, event: EventRecord, before: Configuration) -> CurrentLedger:
    """Book one event (seen against its pre-event configuration) into the ledger."""
    check_event(event, before)
    if event.kind == "exchange":
        bonds = ledger.geometry.bond_table
        b = event.bond
        if not (0 <= b < len(bonds)):
            raise InconsistentEventError(f"bond index {b} out of range")
        x, y, _ = bonds[b]
        if (event.site, event.other) == (x, y):
            a_fwd, a_back = event.from_state, event.to_state
        elif (event.site, event.other) == (y, x):
            a_fwd, a_back = event.to_state, event.from_state
        else:
            raise InconsistentEventError(f"exchange endpoints {event.site},{event.other} do not match bond {b}")
        # a_fwd moves x -> y, a_back moves y -> x
        if a_fwd:
            ledger.W[b, a_fwd - 1] += 1
        if a_back:
            ledger.W[b, a_back - 1] -= 1
        return ledger

    Q = ledger.Q_bulk if event.kind == "reaction" else ledger.Q_boundary
    if event.from_state:
        Q[event.site, event.from_state - 1] -= 1
    if event.to_state:
        Q[event.site, event.to_state - 1] += 1
    return ledger


def compensators(ledger: CurrentLedger, t: float) -> CompensatorTable:
    return ledger.compensators(t)


def continuity_residual(ledger: CurrentLedger, initial: Configuration, config: Configuration) -> np.ndarray:
    """eta_t - eta_0 - div W - Q_bulk - Q_boundary; identically zero for a consistent ledger."""
    return (
        _indicators(config) - _indicators(initial) - ledger.divergence() - ledger.Q_bulk - ledger.Q_boundary
    )


class ContinuityChecker:
    """
    Checks, site by site, eta_i(x) - eta_i,0(x) = sum of signed W over the
    incident bonds + Q_bulk(x, i) + Q_boundary(x, i). Only the sites touched
    by the previous event can change, so each check is local.
    """

    def __init__(self, ledger: CurrentLedger, initial: Configuration):
        self.ledger = ledger
        self.initial = _indicators(initial)
        self.initial_config = initial.copy()
        incident: List[List[Tuple[int, int]]] = [[] for _ in range(ledger.geometry.n_sites)]
        for b, (x, y, _) in enumerate(ledger.geometry.bond_table):
            incident[x].append((b, -1))
            incident[y].append((b, +1))
        self._incident = incident
        self._pending: Tuple[int, ...] = ()
        self.checked = 0

    def mark(self, event: EventRecord) -> None:
        self._pending = (event.site,) if event.other < 0 else (event.site, event.other)

    def check_pending(self, config: Configuration) -> None:
        for x in self._pending:
            self.check_site(config, x)
        self._pending = ()

    def check_site(self, config: Configuration, x: int) -> None:
        L = self.ledger
        s = config.states[x]
        for i in range(3):
            lhs = (1 if s == i + 1 else 0) - int(self.initial[x, i])
            rhs = int(L.Q_bulk[x, i]) + int(L.Q_boundary[x, i])
            for b, sign in self._incident[x]:
                rhs += sign * int(L.W[b, i])
            if lhs != rhs:
                raise AssertionFailure(f"continuity identity broken at site {x}, type {i + 1}: {lhs} != {rhs}")
        self.checked += 1

    def check_all(self, config: Configuration) -> None:
        res = continuity_residual(self.ledger, self.initial_config, config)
        if np.any(res != 0):
            x, i = np.argwhere(res != 0)[0]
            raise AssertionFailure(f"continuity identity broken at site {x}, type {i + 1}")


def merge_ledgers(ledgers: Sequence[CurrentLedger]) -> CurrentLedger:
    """Sum of counters across replicas (compensators are not carried)."""
    if not ledgers:
        raise ValueError("nothing to merge")
    g = ledgers[0].geometry
    out = CurrentLedger.empty(g)
    for L in ledgers:
        if L.geometry != g:
            raise ValueError("ledgers live on different lattices")
        out.W += L.W
        out.Q_bulk += L.Q_bulk
        out.Q_boundary += L.Q_boundary
    return out


def ledger_rows(ledger: CurrentLedger, t: float | None = None) -> Iterator[tuple]:
    """
    Rows (channel, bond_or_site, type, W_or_Q, compensator, quad_variation)
    for every bond/site and type. Compensator columns are empty when none
    were tracked.
    """
    tab = ledger.compensators(t) if (ledger.tracker is not None and t is not None) else None

    def row(channel, key, i, value, comp, qv):
        if tab is None:
            return (channel, key, i + 1, int(value), "", "")
        return (channel, key, i + 1, int(value), float(comp), float(qv))

    for b in range(ledger.W.shape[0]):
        for i in range(3):
            yield row("W", f"b{b}", i, ledger.W[b, i],
                      tab.W_comp[b, i] if tab else 0, tab.W_qv[b, i] if tab else 0)
    for x in range(ledger.Q_bulk.shape[0]):
        for i in range(3):
            yield row("Q_bulk", f"x{x}", i, ledger.Q_bulk[x, i],
                      tab.Q_comp[x, i] if tab else 0, tab.Q_qv[x, i] if tab else 0)
    for x in ledger.geometry.boundary_sites:
        for i in range(3):
            yield row("Q_boundary", f"x{x}", i, ledger.Q_boundary[x, i],
                      tab.B_comp[x, i] if tab else 0, tab.B_qv[x, i] if tab else 0)


LEDGER_CSV_HEADER = ("channel", "bond_or_site", "type", "W_or_Q", "compensator", "quad_variation")


# ------------------------
# martingale centering across replicas

MARTINGALE_CHANNELS = ("W", "Q_bulk", "Q_boundary")


def martingale_sums(ledger: CurrentLedger, t: float) -> Dict[str, np.ndarray]:
    """
    Per channel, a (2, n, 3) stack of the martingale and its
    quadratic-variation compensator at time t. Both rows are additive over
    replicas, so chunked runs can just sum what they return.
    """
    tab = ledger.compensators(t)
    m = ledger.martingales(t)
    qv = {"W": tab.W_qv, "Q_bulk": tab.Q_qv, "Q_boundary": tab.B_qv}
    return {k: np.stack([m[k].astype(float), qv[k]]) for k in MARTINGALE_CHANNELS}


def add_martingale_sums(a: Dict[str, np.ndarray] | None, b: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    if a is None:
        return {k: v.copy() for k, v in b.items()}
    return {k: a[k] + b[k] for k in MARTINGALE_CHANNELS}


@dataclass(frozen=True)
class MartingaleCentering:
    """
    Replica means of the W and Q martingales with standard errors taken
    from the quadratic variation: Var M_t = E[<M>_t], so
    stderr = sqrt(mean <M>_t / replicas).
    """
    replicas: int
    mean: Dict[str, np.ndarray]
    stderr: Dict[str, np.ndarray]

    @classmethod
    def from_sums(cls, sums: Dict[str, np.ndarray], replicas: int) -> "MartingaleCentering":
        if replicas < 1:
            raise ValueError(f"replicas must be >= 1, got {replicas}")
        mean = {k: sums[k][0] / replicas for k in MARTINGALE_CHANNELS}
        se = {k: np.sqrt(np.maximum(sums[k][1], 0.0)) / replicas for k in MARTINGALE_CHANNELS}
        return cls(replicas=replicas, mean=mean, stderr=se)

    def z_scores(self, channel: str) -> np.ndarray:
        """|mean| / stderr; entries that never move are 0, or inf if their mean is off zero."""
        m, se = np.abs(self.mean[channel]), self.stderr[channel]
        z = np.zeros_like(m)
        moving = se > 0
        z[moving] = m[moving] / se[moving]
        z[~moving & (m > 1e-12)] = np.inf
        return z

    def centered(self, channel: str, n_se: float = 3.0) -> bool:
        return bool(np.all(self.z_scores(channel) <= n_se))

    def z_max(self) -> float:
        return max(float(self.z_scores(k).max(initial=0.0)) for k in MARTINGALE_CHANNELS)

    def rows(self) -> Iterator[tuple]:
        """(channel, bond_or_site, type, mean, stderr) for every tracked entry."""
        for k in MARTINGALE_CHANNELS:
            prefix = "b" if k == "W" else "x"
            for idx in range(self.mean[k].shape[0]):
                for i in range(3):
                    yield (k, f"{prefix}{idx}", i + 1, float(self.mean[k][idx, i]), float(self.stderr[k][idx, i]))


MARTINGALE_CSV_HEADER = ("channel", "bond_or_site", "type", "mean", "stderr")
