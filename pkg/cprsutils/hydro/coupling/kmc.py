# cprsutils/hydro/coupling/kmc.py
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

from cprsutils.hydro.config.model_params import ModelParams
from cprsutils.hydro.engine.events import EventKind, SimClock
from cprsutils.hydro.engine.rng import UniformStream, replica_rng
from cprsutils.hydro.errors import NonFiniteRateError
from cprsutils.hydro.logging_utils import get_logger, kv

from .pair import CoupledConfiguration
from .rates import CoupledMove, coupled_boundary_rates, coupled_reaction_rates

log = get_logger(__name__)


@dataclass(frozen=True, slots=True)
class CoupledEvent:
    kind: EventKind
    time: float
    move: CoupledMove


class CoupledObserver(Protocol):
    """Called before each joint move is applied, like the single-copy observers."""

    def on_start(self, t: float, pair: CoupledConfiguration) -> None:
        ...

    def on_event(self, event: CoupledEvent, pair: CoupledConfiguration) -> None:
        ...

    def on_finish(self, t: float, pair: CoupledConfiguration) -> None:
        ...


class CoupledKmcEngine:
    """
    Thinning for the coupled generator. Envelopes: N^2 per bond (one joint
    or right-only swap per bond), 2R per site (each copy's reaction rates
    are bounded by R) and N^2 per boundary site. Same two-uniform scheme as
    KmcEngine.
    """

    def __init__(
        self,
        pair: CoupledConfiguration,
        params: ModelParams,
        *,
        seed: int,
        replica_id: int = 0,
        observers: Sequence[CoupledObserver] = (),
        batch: int = 8192,
    ):
        self.pair = pair.copy()
        self.params = params.as_float()
        self.observers = list(observers)
        self.clock = SimClock()

        g = self.pair.geometry
        p = self.params
        self._L = self.pair.left.states
        self._R = self.pair.right.states
        self._bonds = g.bond_table
        self._bsites = g.boundary_sites
        self._bond_in_box = [g.in_box(x, pair.box_M) and g.in_box(y, pair.box_M) for x, y, _ in self._bonds]
        self._n2 = float(p.n2)
        self._site_env = 2.0 * float(p.reaction_bound(g.d))

        self._e_ex = self._n2 * len(self._bonds) if p.exchange_on else 0.0
        self._e_re = self._site_env * g.n_sites if p.reaction_on else 0.0
        self._e_bd = self._n2 * len(self._bsites) if p.boundary_on else 0.0
        self._total = self._e_ex + self._e_re + self._e_bd
        if not math.isfinite(self._total):
            raise NonFiniteRateError(f"rate envelope is not finite: {self._total}")

        self._u = UniformStream(replica_rng(seed, replica_id), batch)
        self._next_t: float | None = None
        self._started = False
        self._finished = False
        self.tentative = 0
        self.rejected = 0

    def _wait(self) -> float:
        return -math.log1p(-self._u.next()) / self._total

    def _start(self) -> None:
        self._started = True
        for ob in self.observers:
            ob.on_start(self.clock.t, self.pair)

    def advance_to(self, t_target: float) -> CoupledConfiguration:
        if self._finished:
            raise RuntimeError("engine already finished")
        if t_target < self.clock.t:
            raise ValueError(f"cannot advance backwards: {t_target} < {self.clock.t}")
        if not self._started:
            self._start()
        if self._total <= 0:
            self.clock.t = t_target
            return self.pair
        if self._next_t is None:
            self._next_t = self.clock.t + self._wait()
        while self._next_t <= t_target:
            t_ev = self._next_t
            self.clock.t = t_ev
            self._step(t_ev)
            self._next_t = t_ev + self._wait()
        self.clock.t = t_target
        return self.pair

    def finish(self) -> CoupledConfiguration:
        if not self._started:
            self._start()
        if not self._finished:
            self._finished = True
            for ob in self.observers:
                ob.on_finish(self.clock.t, self.pair)
            log.debug(kv(
                "coupled_kmc_finished", t=self.clock.t, events=self.clock.event_count,
                tentative=self.tentative, rejected=self.rejected,
            ))
        return self.pair

    def _apply(self, move: CoupledMove, t: float) -> None:
        self.clock.event_count += 1
        if self.observers:
            ev = CoupledEvent(move.kind, t, move)
            for ob in self.observers:
                ob.on_event(ev, self.pair)
        x = move.site
        if move.kind == "exchange":
            y = move.other
            if move.left is not None:
                self._L[x], self._L[y] = self._L[y], self._L[x]
            if move.right is not None:
                self._R[x], self._R[y] = self._R[y], self._R[x]
            return
        if move.left is not None:
            self._L[x] = move.left
        if move.right is not None:
            self._R[x] = move.right

    def _pick(self, table, w: float) -> CoupledMove | None:
        for move, rate in table:
            if w < rate:
                return move
            w -= rate
        return None

    def _step(self, t: float) -> None:
        self.tentative += 1
        v = self._u.next() * self._total
        L, R = self._L, self._R

        if v < self._e_ex or (self._e_re == 0 and self._e_bd == 0):
            b = min(int(v / self._n2), len(self._bonds) - 1)
            x, y, _ = self._bonds[b]
            r_moves = R[x] != R[y]
            l_moves = self._bond_in_box[b] and L[x] != L[y]
            if not (r_moves or l_moves):
                self.rejected += 1
                return
            label = "3" if self._bond_in_box[b] else "4"
            move = CoupledMove(
                "exchange", x, L[y] if l_moves else None, R[y] if r_moves else None, label, y, b
            )
            self._apply(move, t)
            return

        v -= self._e_ex
        if v < self._e_re or self._e_bd == 0:
            env = self._site_env
            x = min(int(v / env), len(L) - 1)
            move = self._pick(coupled_reaction_rates(self.pair, x, self.params), v - x * env)
            if move is None:
                self.rejected += 1
                return
            self._apply(move, t)
            return

        v -= self._e_re
        k = min(int(v / self._n2), len(self._bsites) - 1)
        x = self._bsites[k]
        move = self._pick(coupled_boundary_rates(self.pair, x, self.params), v - k * self._n2)
        if move is None:
            self.rejected += 1
            return
        self._apply(move, t)


def simulate_coupled(
    pair: CoupledConfiguration,
    params: ModelParams,
    t_end: float,
    seed: int,
    observers: Sequence[CoupledObserver] = (),
    *,
    replica_id: int = 0,
) -> CoupledConfiguration:
    """Exact path of the coupled chain to t_end; the input pair is not modified."""
    if t_end < 0:
        raise ValueError(f"t_end must be >= 0, got {t_end}")
    engine = CoupledKmcEngine(pair, params, seed=seed, replica_id=replica_id, observers=observers)
    engine.advance_to(t_end)
    return engine.finish()
