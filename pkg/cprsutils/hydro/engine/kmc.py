# cprsutils/hydro/engine/kmc.py
from __future__ import annotations

import math
from typing import Sequence

from cprsutils.hydro.config.model_params import ModelParams
from cprsutils.hydro.errors import NonFiniteRateError
from cprsutils.hydro.logging_utils import get_logger, kv
from cprsutils.lattice.core import BOTH, WILD, Configuration

from .events import EventObserver, EventRecord, SimClock
from .rng import UniformStream, replica_rng

log = get_logger(__name__)


def channel_bounds(config: Configuration, params: ModelParams) -> tuple[float, float, float]:
    """Envelope rates of the (exchange, reaction, boundary) channels."""
    g = config.geometry
    n2 = float(params.n2)
    ex = n2 * len(g.bond_table) if params.exchange_on else 0.0
    re = g.n_sites * float(params.reaction_bound(g.d)) if params.reaction_on else 0.0
    bd = n2 * len(g.boundary_sites) if params.boundary_on else 0.0
    return ex, re, bd


def total_rate_bound(config: Configuration, params: ModelParams) -> float:
    """Upper bound on the total jump rate of any configuration on this lattice."""
    return sum(channel_bounds(config, params))


class KmcEngine:
    """
    Rejection (thinning) kinetic Monte Carlo for the full generator.

    Tentative events arrive at the constant envelope rate; each one picks a
    channel and a bond/site in proportion to the channel bounds and is
    accepted with probability (true rate) / (envelope share). Two uniforms
    per tentative event: one for the waiting time, one for the
    channel/index/acceptance choice.

    Time is macroscopic: the N^2 speed-up lives in the rates.
    """

    def __init__(
        self,
        init: Configuration,
        params: ModelParams,
        *,
        seed: int,
        replica_id: int = 0,
        observers: Sequence[EventObserver] = (),
        batch: int = 8192,
    ):
        self.config = init.copy()
        self.params = params
        self.observers = list(observers)
        self.clock = SimClock()

        g = init.geometry
        p = params.as_float()
        self._states = self.config.states
        self._nbrs = g.neighbor_table
        self._bonds = g.bond_table
        self._bsites = g.boundary_sites
        self._n2 = float(p.n2)
        self._r = float(p.r)
        self._l1 = float(p.lambda1)
        self._l2 = float(p.lambda2)
        self._R = float(p.reaction_bound(g.d))

        # cumulative (b0, b0+b1, b0+b1+b2) per boundary site
        self._bcum = []
        for x in self._bsites:
            b0, b1, b2, _ = p.b_hat.full(g.boundary_side(x))
            self._bcum.append((b0, b0 + b1, b0 + b1 + b2))

        self._e_ex, self._e_re, self._e_bd = channel_bounds(init, p)
        self._total = self._e_ex + self._e_re + self._e_bd
        if not math.isfinite(self._total):
            raise NonFiniteRateError(f"rate envelope is not finite: {self._total}")

        self._u = UniformStream(replica_rng(seed, replica_id), batch)
        self._next_t: float | None = None
        self._started = False
        self._finished = False

        self.tentative = 0
        self.rejected = 0
        self.noop_exchanges = 0

    @property
    def envelope(self) -> float:
        return self._total

    def _wait(self) -> float:
        return -math.log1p(-self._u.next()) / self._total

    def _start(self) -> None:
        self._started = True
        for ob in self.observers:
            ob.on_start(self.clock.t, self.config)

    def _emit(self, ev: EventRecord) -> None:
        for ob in self.observers:
            ob.on_event(ev, self.config)

    def advance_to(self, t_target: float) -> Configuration:
        """
        Run until t_target and stop there. The pending tentative event time
        is kept, so splitting a run at intermediate times yields the same
        event stream as one uninterrupted run.
        """
        if self._finished:
            raise RuntimeError("engine already finished")
        if t_target < self.clock.t:
            raise ValueError(f"cannot advance backwards: {t_target} < {self.clock.t}")
        if not self._started:
            self._start()
        if self._total <= 0:
            self.clock.t = t_target
            return self.config

        if self._next_t is None:
            self._next_t = self.clock.t + self._wait()
        while self._next_t <= t_target:
            t_ev = self._next_t
            self.clock.t = t_ev
            self._step(t_ev)
            self._next_t = t_ev + self._wait()
        self.clock.t = t_target
        return self.config

    def finish(self) -> Configuration:
        if not self._started:
            self._start()
        if not self._finished:
            self._finished = True
            for ob in self.observers:
                ob.on_finish(self.clock.t, self.config)
            log.debug(kv(
                "kmc_finished", t=self.clock.t, events=self.clock.event_count,
                tentative=self.tentative, rejected=self.rejected, noop=self.noop_exchanges,
            ))
        return self.config

    def _step(self, t: float) -> None:
        self.tentative += 1
        states = self._states
        v = self._u.next() * self._total

        if v < self._e_ex or (self._e_re == 0 and self._e_bd == 0):
            b = min(int(v / self._n2), len(self._bonds) - 1)
            x, y, _ = self._bonds[b]
            sx, sy = states[x], states[y]
            self.clock.event_count += 1
            if sx == sy:
                self.noop_exchanges += 1
                return
            if self.observers:
                self._emit(EventRecord("exchange", t, x, sx, sy, y, b))
            states[x], states[y] = sy, sx
            return

        v -= self._e_ex
        if v < self._e_re or self._e_bd == 0:
            R = self._R
            x = min(int(v / R), len(states) - 1)
            w = v - x * R
            s = states[x]
            a = self._r if not (s & 2) else 1.0
            if w < a:
                target = s ^ 2
            else:
                w -= a
                if s & 1:
                    rate = 1.0
                else:
                    rate = 0.0
                    for y in self._nbrs[x]:
                        sy = states[y]
                        if sy == WILD:
                            rate += self._l1
                        elif sy == BOTH:
                            rate += self._l2
                if w >= rate:
                    self.rejected += 1
                    return
                target = s ^ 1
            self.clock.event_count += 1
            if self.observers:
                self._emit(EventRecord("reaction", t, x, s, target))
            states[x] = target
            return

        v -= self._e_re
        k = min(int(v / self._n2), len(self._bsites) - 1)
        frac = v / self._n2 - k
        x = self._bsites[k]
        c0, c1, c2 = self._bcum[k]
        j = 0 if frac < c0 else 1 if frac < c1 else 2 if frac < c2 else 3
        s = states[x]
        if j == s:
            self.rejected += 1
            return
        self.clock.event_count += 1
        if self.observers:
            self._emit(EventRecord("boundary", t, x, s, j))
        states[x] = j


def simulate(
    init: Configuration,
    params: ModelParams,
    t_end: float,
    seed: int,
    observers: Sequence[EventObserver] = (),
    *,
    replica_id: int = 0,
    event_log: str | None = None,
) -> Configuration:
    """
    Exact CTMC path from `init` to `t_end`; returns the final configuration
    (init is not modified). Observers see every state-changing event in
    time order. `event_log` writes an NDJSON line per reported event.
    """
    if t_end < 0:
        raise ValueError(f"t_end must be >= 0, got {t_end}")
    obs = list(observers)
    sink = None
    if event_log is not None:
        from .event_log import EventLogObserver

        sink = EventLogObserver(event_log)
        obs.append(sink)
    engine = KmcEngine(init, params, seed=seed, replica_id=replica_id, observers=obs)
    try:
        engine.advance_to(t_end)
        return engine.finish()
    except BaseException:
        if sink is not None:
            sink.abort()
        raise
