# cprsutils/hydro/measures/compensators.py
"""
Exact time integrals of the jump intensities of the current ledgers.

For every bond b = (x, y) and type i the W compensator is
    N^2 * int (eta_i(x) - eta_i(y)) ds
with quadratic-variation intensity N^2 |eta_i(x) - eta_i(y)|.
For every site the bulk Q compensator integrates the net reaction creation
rate f_i:
    f1 = beta eta0 + eta3 - (1 + r) eta1
    f2 = r eta0 + eta3 - (beta + 1) eta2
    f3 = beta eta2 + r eta1 - 2 eta3
and the reservoir Q compensator integrates N^2 (b_i - eta_i) at boundary sites.

Intensities are piecewise constant between events, so each key keeps its
current intensity and the time it was last integrated. An event only
touches the keys near its sites: those are integrated up to the event time
and marked dirty, and their new intensities are read off the configuration
at the next notification (observers are called before the event applies).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from cprsutils.hydro.config.model_params import ModelParams
from cprsutils.lattice.core import Configuration, Geometry

from cprsutils.hydro.engine.events import EventRecord


@dataclass(frozen=True)
class CompensatorTable:
    t: float
    W_comp: np.ndarray      # (n_bonds, 3)
    W_qv: np.ndarray
    Q_comp: np.ndarray      # (n_sites, 3) bulk reaction
    Q_qv: np.ndarray
    B_comp: np.ndarray      # (n_sites, 3) reservoirs, zero off the boundary
    B_qv: np.ndarray


def reaction_intensities(state: int, b: float, r: float) -> Tuple[Tuple[float, float, float], Tuple[float, float, float]]:
    """(f1, f2, f3) and the matching quadratic-variation intensities at one site."""
    e0 = 1.0 if state == 0 else 0.0
    e1 = 1.0 if state == 1 else 0.0
    e2 = 1.0 if state == 2 else 0.0
    e3 = 1.0 if state == 3 else 0.0
    f = (
        b * e0 + e3 - (1.0 + r) * e1,
        r * e0 + e3 - b * e2 - e2,
        b * e2 + r * e1 - 2.0 * e3,
    )
    qv = (
        b * e0 + e3 + (r + 1.0) * e1,
        r * e0 + e3 + b * e2 + e2,
        b * e2 + r * e1 + 2.0 * e3,
    )
    return f, qv


class CompensatorTracker:
    def __init__(self, geometry: Geometry, params: ModelParams):
        p = params.as_float()
        self.geometry = geometry
        self._nbrs = geometry.neighbor_table
        self._bonds = geometry.bond_table
        self._n2_ex = float(p.n2) if p.exchange_on else 0.0
        self._n2_bd = float(p.n2) if p.boundary_on else 0.0
        self._react = p.reaction_on
        self._r = float(p.r)
        self._l1 = float(p.lambda1)
        self._l2 = float(p.lambda2)
        self._bvals = {x: p.b_hat.at(geometry.boundary_side(x)) for x in geometry.boundary_sites}

        incident: list[list[int]] = [[] for _ in range(geometry.n_sites)]
        for b, (x, y, _) in enumerate(self._bonds):
            incident[x].append(b)
            incident[y].append(b)
        self._incident = [tuple(v) for v in incident]

        nb, ns = len(self._bonds), geometry.n_sites
        self.W_rate = np.zeros((nb, 3))
        self.W_qrate = np.zeros((nb, 3))
        self.W_acc = np.zeros((nb, 3))
        self.W_qacc = np.zeros((nb, 3))
        self.W_tlast = np.zeros(nb)

        self.Q_rate = np.zeros((ns, 3))
        self.Q_qrate = np.zeros((ns, 3))
        self.Q_acc = np.zeros((ns, 3))
        self.Q_qacc = np.zeros((ns, 3))
        self.Q_tlast = np.zeros(ns)

        self.B_rate = np.zeros((ns, 3))
        self.B_qrate = np.zeros((ns, 3))
        self.B_acc = np.zeros((ns, 3))
        self.B_qacc = np.zeros((ns, 3))
        self.B_tlast = np.zeros(ns)

        self._config: Configuration | None = None
        self._dirty_bonds: set[int] = set()
        self._dirty_sites: set[int] = set()

    # ------------------------
    # intensities

    def _set_bond(self, b: int, states) -> None:
        x, y, _ = self._bonds[b]
        sx, sy = states[x], states[y]
        for i in range(3):
            diff = (1.0 if sx == i + 1 else 0.0) - (1.0 if sy == i + 1 else 0.0)
            self.W_rate[b, i] = self._n2_ex * diff
            self.W_qrate[b, i] = self._n2_ex * abs(diff)

    def _set_site(self, x: int, states) -> None:
        s = states[x]
        if self._react:
            b = 0.0
            if not (s & 1):
                for y in self._nbrs[x]:
                    if states[y] == 1:
                        b += self._l1
                    elif states[y] == 3:
                        b += self._l2
            f, qv = reaction_intensities(s, b, self._r)
            self.Q_rate[x] = f
            self.Q_qrate[x] = qv
        bv = self._bvals.get(x)
        if bv is not None:
            for i in range(3):
                e = 1.0 if s == i + 1 else 0.0
                self.B_rate[x, i] = self._n2_bd * (bv[i] - e)
                self.B_qrate[x, i] = self._n2_bd * (bv[i] * (1.0 - e) + (1.0 - bv[i]) * e)

    def _resolve(self) -> None:
        states = self._config.states
        for b in self._dirty_bonds:
            self._set_bond(b, states)
        for x in self._dirty_sites:
            self._set_site(x, states)
        self._dirty_bonds.clear()
        self._dirty_sites.clear()

    def _flush_bond(self, b: int, t: float) -> None:
        dt = t - self.W_tlast[b]
        self.W_acc[b] += self.W_rate[b] * dt
        self.W_qacc[b] += self.W_qrate[b] * dt
        self.W_tlast[b] = t
        self._dirty_bonds.add(b)

    def _flush_site(self, x: int, t: float) -> None:
        dt = t - self.Q_tlast[x]
        self.Q_acc[x] += self.Q_rate[x] * dt
        self.Q_qacc[x] += self.Q_qrate[x] * dt
        self.B_acc[x] += self.B_rate[x] * dt
        self.B_qacc[x] += self.B_qrate[x] * dt
        self.Q_tlast[x] = t
        self._dirty_sites.add(x)

    # ------------------------
    # observer hooks

    def on_start(self, t: float, config: Configuration) -> None:
        self._config = config
        states = config.states
        for b in range(len(self._bonds)):
            self._set_bond(b, states)
        for x in range(self.geometry.n_sites):
            self._set_site(x, states)
        self.W_tlast[:] = t
        self.Q_tlast[:] = t

    def on_event(self, event: EventRecord, before: Configuration) -> None:
        self._resolve()
        t = event.time
        touched = (event.site,) if event.other < 0 else (event.site, event.other)
        sites = set(touched)
        for x in touched:
            sites.update(self._nbrs[x])
            for b in self._incident[x]:
                if b not in self._dirty_bonds:
                    self._flush_bond(b, t)
        for x in sites:
            if x not in self._dirty_sites:
                self._flush_site(x, t)

    def on_finish(self, t: float, config: Configuration) -> None:
        self._config = config
        self._resolve()

    def table(self, t: float) -> CompensatorTable:
        """Integrals up to time t (t not before the last event)."""
        if self._config is None:
            raise RuntimeError("tracker was never started")
        self._resolve()
        dW = (t - self.W_tlast)[:, None]
        dQ = (t - self.Q_tlast)[:, None]
        return CompensatorTable(
            t=t,
            W_comp=self.W_acc + self.W_rate * dW,
            W_qv=self.W_qacc + self.W_qrate * dW,
            Q_comp=self.Q_acc + self.Q_rate * dQ,
            Q_qv=self.Q_qacc + self.Q_qrate * dQ,
            B_comp=self.B_acc + self.B_rate * dQ,
            B_qv=self.B_qacc + self.B_qrate * dQ,
        )
