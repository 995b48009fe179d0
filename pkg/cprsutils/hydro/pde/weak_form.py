# cprsutils/hydro/pde/weak_form.py
"""
Weak-form residual of a density trajectory against a test triple G:

    R = <rho_T, G_T> - <rho_0, G_0>
        - int_0^T <rho, dG/dt> dt
        - int_0^T <rho, Lap G> dt                  (exchange on)
        - int_0^T <F(rho), G> dt                   (reaction on)
        + sum_i int_0^T int_Gamma n1 b_i dG_i/du1 dS dt   (exchange on)

with n1 = -1 on the left face and +1 on the right. With the reservoirs off
the face values of rho stand in for b. Spatial integrals use the mesh
trapezoid rule, the time integral the trapezoid rule over the observed steps.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from cprsutils.hydro.config.model_params import BoundaryProfile, ModelParams
from cprsutils.hydro.errors import BoundaryVanishingError
from cprsutils.hydro.measures.test_functions import TestFunction

from .ftcs import PdeMesh, PdeState, PdeTrajectory, TimeIntegral
from .reaction import reaction_F


def _require_vanishing(G_hat: Sequence[TestFunction]) -> None:
    bad = [G.name for G in G_hat if not G.boundary_vanishing]
    if bad:
        raise BoundaryVanishingError(f"test functions must vanish on the reservoir faces: {', '.join(bad)}")


class WeakResidualMonitor:
    """Feed it every solver state in time order; read `residual` at the end."""

    def __init__(self, G_hat: Sequence[TestFunction], b_hat: BoundaryProfile, params: ModelParams):
        if len(G_hat) != 3:
            raise ValueError("weak residual needs a triple of test functions")
        self.G_hat = tuple(G_hat)
        self.params = params
        self._left = np.array([float(x) for x in b_hat.left])
        self._right = np.array([float(x) for x in b_hat.right])
        self._integral = TimeIntegral(self._integrand)
        self._first: float | None = None
        self._last: float = 0.0
        self._checked = False
        # time-independent test functions are evaluated once per mesh
        self._cache: dict[tuple[int, str], np.ndarray] = {}

    def _values(self, mesh: PdeMesh, i: int, fn_name: str, t: float) -> np.ndarray:
        G = self.G_hat[i]
        if G.decay:
            return getattr(G, fn_name)(mesh.points, t).reshape(mesh.shape)
        key = (i, fn_name)
        if key not in self._cache:
            self._cache[key] = getattr(G, fn_name)(mesh.points, t).reshape(mesh.shape)
        return self._cache[key]

    def _pair(self, mesh: PdeMesh, rho: np.ndarray, fn_name: str, t: float) -> float:
        total = 0.0
        for i in range(3):
            total += mesh.integrate(rho[i] * self._values(mesh, i, fn_name, t))
        return total

    def _face_term(self, state: PdeState) -> float:
        """sum_i int_Gamma n1 b_i dG_i/du1 dS."""
        mesh = state.mesh
        dirichlet = bool(self.params.boundary_on)
        total = 0.0
        for idx, n1 in ((0, -1.0), (-1, +1.0)):
            pts = mesh.points.reshape(mesh.shape + (mesh.d,))[idx].reshape(-1, mesh.d)
            if dirichlet:
                vals = np.tile((self._left if idx == 0 else self._right)[:, None], (1, len(pts)))
            else:
                vals = state.rho[:, idx].reshape(3, -1)
            dS = mesh.h if mesh.d == 2 else 1.0
            for i, G in enumerate(self.G_hat):
                d1 = G.grad(pts, state.t)[:, 0]
                total += n1 * dS * float(np.sum(vals[i] * d1))
        return total

    def _integrand(self, state: PdeState) -> float:
        mesh, rho, t = state.mesh, state.rho, state.t
        val = self._pair(mesh, rho, "dt", t)
        if self.params.exchange_on:
            val += self._pair(mesh, rho, "laplacian", t)
            if mesh.mode == "reservoirs":
                val -= self._face_term(state)
        if self.params.reaction_on:
            F = reaction_F(state.node_values(), self.params, mesh.d, slack=None)
            F = F.T.reshape((3,) + mesh.shape)
            val += self._pair(mesh, F, "value", t)
        return val

    def observe(self, state: PdeState) -> None:
        if not self._checked:
            if state.mesh.mode == "reservoirs":
                _require_vanishing(self.G_hat)
            self._checked = True
        pairing = self._pair(state.mesh, state.rho, "value", state.t)
        if self._first is None:
            self._first = pairing
        self._last = pairing
        self._integral.observe(state)

    @property
    def residual(self) -> float:
        if self._first is None:
            raise RuntimeError("no states observed")
        return abs(self._last - self._first - self._integral.value)


def weak_residual(
    trajectory: PdeTrajectory | Sequence[PdeState],
    G_hat: Sequence[TestFunction],
    b_hat: BoundaryProfile,
    params: ModelParams,
) -> float:
    """
    |R| over a recorded trajectory. The time quadrature only sees the
    recorded states, so record densely (record_every=1) or attach a
    WeakResidualMonitor to the solver instead.
    """
    states = trajectory.states if isinstance(trajectory, PdeTrajectory) else list(trajectory)
    mon = WeakResidualMonitor(G_hat, b_hat, params)
    for s in states:
        mon.observe(s)
    return mon.residual
