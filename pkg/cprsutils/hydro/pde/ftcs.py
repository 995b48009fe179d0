# cprsutils/hydro/pde/ftcs.py
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, List, Literal, Protocol, Sequence

import numpy as np

from cprsutils.hydro.config.model_params import BoundaryProfile, ModelParams
from cprsutils.hydro.errors import CflViolationError, SimplexViolationError, SpecValidationError
from cprsutils.hydro.logging_utils import get_logger, kv

from .reaction import reaction_F

log = get_logger(__name__)

Mode = Literal["reservoirs", "torus"]
SIMPLEX_TOL = 1e-9


def _count(length: float, h: float, what: str) -> int:
    n = length / h
    k = int(round(n))
    if k < 2 or abs(n - k) > 1e-9 * max(1.0, n):
        raise SpecValidationError(f"{what} length {length} is not a whole number (>= 2) of steps h={h}")
    return k


@dataclass(frozen=True)
class PdeMesh:
    """
    Nodes u1 = -1 + k h along e1 (both ends included in reservoirs mode,
    periodic without the duplicate end in torus mode) and u2 = k h on the
    transverse circle of length transverse_period (d = 2).
    """
    d: int
    h: float
    mode: Mode = "reservoirs"
    transverse_period: float = 2.0

    def __post_init__(self) -> None:
        if self.d not in (1, 2):
            raise SpecValidationError(f"only d=1 and d=2 are supported, got d={self.d}")
        if self.mode not in ("reservoirs", "torus"):
            raise SpecValidationError(f"unknown mode: {self.mode}")
        if not (self.h > 0):
            raise SpecValidationError(f"h must be > 0, got {self.h}")
        _ = self.n1, self.n2

    @cached_property
    def n1(self) -> int:
        k = _count(2.0, self.h, "axial")
        return k + 1 if self.mode == "reservoirs" else k

    @cached_property
    def n2(self) -> int:
        return _count(self.transverse_period, self.h, "transverse") if self.d == 2 else 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n1,) if self.d == 1 else (self.n1, self.n2)

    @cached_property
    def u1(self) -> np.ndarray:
        return -1.0 + self.h * np.arange(self.n1)

    @cached_property
    def u2(self) -> np.ndarray:
        return self.h * np.arange(self.n2)

    @cached_property
    def points(self) -> np.ndarray:
        """(n_nodes, d), row-major over (u1, u2)."""
        if self.d == 1:
            return self.u1[:, None]
        U1, U2 = np.meshgrid(self.u1, self.u2, indexing="ij")
        return np.stack([U1.ravel(), U2.ravel()], axis=1)

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights (closed ends along e1, periodic otherwise), shaped like the grid."""
        w1 = np.full(self.n1, self.h)
        if self.mode == "reservoirs":
            w1[0] = w1[-1] = self.h / 2.0
        if self.d == 1:
            return w1
        return np.outer(w1, np.full(self.n2, self.h))

    def integrate(self, values: np.ndarray) -> float:
        """Quadrature of a grid-shaped array."""
        return float(np.sum(self.weights * values))


@dataclass(frozen=True)
class PdeState:
    """rho has shape (3, *mesh.shape)."""
    rho: np.ndarray
    t: float
    mesh: PdeMesh

    def node_values(self) -> np.ndarray:
        """(n_nodes, 3), rows ordered like mesh.points."""
        return self.rho.reshape(3, -1).T

    def sup_distance(self, other: "PdeState") -> float:
        return float(np.max(np.abs(self.rho - other.rho)))


class StepMonitor(Protocol):
    def observe(self, state: PdeState) -> None:
        ...


@dataclass
class PdeTrajectory:
    mesh: PdeMesh
    dt: float
    states: List[PdeState] = field(default_factory=list)
    steps: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def at(self, t: float, tol: float = 1e-12) -> PdeState:
        for s in self.states:
            if abs(s.t - t) <= tol * max(1.0, abs(t)):
                return s
        raise KeyError(f"no recorded state at t={t}")

    @property
    def final(self) -> PdeState:
        return self.states[-1]


def laplacian(rho: np.ndarray, mesh: PdeMesh, *, dirichlet: bool) -> np.ndarray:
    """
    Five-point (three-point in d=1) Laplacian of every component. Along e1:
    periodic in torus mode; in reservoirs mode the end nodes get 0 when
    `dirichlet` (they are pinned) and a reflecting stencil otherwise.
    """
    h2 = mesh.h * mesh.h
    out = np.empty_like(rho)
    if mesh.mode == "torus":
        out[:] = (np.roll(rho, 1, axis=1) - 2.0 * rho + np.roll(rho, -1, axis=1)) / h2
    else:
        out[:, 1:-1] = (rho[:, :-2] - 2.0 * rho[:, 1:-1] + rho[:, 2:]) / h2
        if dirichlet:
            out[:, 0] = 0.0
            out[:, -1] = 0.0
        else:
            out[:, 0] = 2.0 * (rho[:, 1] - rho[:, 0]) / h2
            out[:, -1] = 2.0 * (rho[:, -2] - rho[:, -1]) / h2
    if mesh.d == 2:
        lap2 = (np.roll(rho, 1, axis=2) - 2.0 * rho + np.roll(rho, -1, axis=2)) / h2
        if mesh.mode == "reservoirs" and dirichlet:
            lap2[:, 0] = 0.0
            lap2[:, -1] = 0.0
        out += lap2
    return out


def cfl_limit(h: float, d: int) -> float:
    """Largest stable explicit step for unit diffusivity, with safety factor 2."""
    return h * h / (2.0 * 2 * d)


def _pin(rho: np.ndarray, b_hat: BoundaryProfile) -> None:
    left = np.array([float(x) for x in b_hat.left])
    right = np.array([float(x) for x in b_hat.right])
    extra = (None,) * (rho.ndim - 2)
    rho[:, 0] = left[(slice(None),) + extra]
    rho[:, -1] = right[(slice(None),) + extra]


def _simplex_ok(rho: np.ndarray) -> bool:
    return bool(rho.min() >= -SIMPLEX_TOL and rho.sum(axis=0).max() <= 1.0 + SIMPLEX_TOL)


def solve_pde(
    gamma: Callable[[np.ndarray], np.ndarray],
    b_hat: BoundaryProfile,
    params: ModelParams,
    T: float,
    h: float,
    dt: float | None = None,
    *,
    d: int = 1,
    mode: Mode = "reservoirs",
    transverse_period: float = 2.0,
    snapshot_times: Sequence[float] = (),
    record_every: int = 0,
    monitors: Sequence[StepMonitor] = (),
    on_violation: Literal["raise", "log"] = "raise",
) -> PdeTrajectory:
    """
    Forward Euler in time, centered differences in space.

    Diffusion runs when exchange is on, the reaction term when reaction is
    on. In reservoirs mode the end nodes are pinned to b_hat when the
    reservoirs are on and reflecting otherwise. Steps are shortened to land
    exactly on each snapshot time; states at t=0, at every snapshot and at T
    are recorded (plus every `record_every`-th step when > 0). Monitors see
    every state, including t=0.
    """
    mesh = PdeMesh(d=d, h=h, mode=mode, transverse_period=transverse_period)
    limit = cfl_limit(h, d)
    if dt is None:
        dt = limit
    if not (dt > 0):
        raise SpecValidationError(f"dt must be > 0, got {dt}")
    if dt > limit * (1.0 + 1e-12):
        raise CflViolationError(f"dt={dt:.3g} exceeds h^2/(4d)={limit:.3g}")
    if T < 0:
        raise SpecValidationError(f"T must be >= 0, got {T}")

    diffuse = bool(params.exchange_on)
    react = bool(params.reaction_on)
    dirichlet = mode == "reservoirs" and bool(params.boundary_on)

    vals = np.asarray(gamma(mesh.points), dtype=float)
    if vals.shape != (mesh.points.shape[0], 3):
        raise SpecValidationError(f"initial profile must return shape ({mesh.points.shape[0]}, 3), got {vals.shape}")
    rho = vals.T.reshape((3,) + mesh.shape).copy()
    if not _simplex_ok(rho):
        raise SimplexViolationError("initial profile leaves the simplex")
    if dirichlet:
        left = np.array([float(x) for x in b_hat.left])
        right = np.array([float(x) for x in b_hat.right])
        mismatch = max(
            float(np.max(np.abs(rho[:, 0].reshape(3, -1) - left[:, None]))),
            float(np.max(np.abs(rho[:, -1].reshape(3, -1) - right[:, None]))),
        )
        if mismatch > 1e-9:
            log.warning(kv("initial_profile_incompatible_with_reservoirs", mismatch=mismatch))
        _pin(rho, b_hat)

    traj = PdeTrajectory(mesh=mesh, dt=dt)
    state = PdeState(rho, 0.0, mesh)
    traj.states.append(state)
    for m in monitors:
        m.observe(state)

    targets = sorted({float(s) for s in snapshot_times if 0 < s < T} | ({float(T)} if T > 0 else set()))
    t = 0.0
    step = 0
    for target in targets:
        while t < target:
            remaining = target - t
            k = remaining if remaining <= dt * (1.0 + 1e-9) else dt
            update = np.zeros_like(rho)
            if diffuse:
                update += laplacian(rho, mesh, dirichlet=dirichlet)
            if react:
                F = reaction_F(np.moveaxis(rho, 0, -1), params, d, slack=None)
                F = np.moveaxis(F, -1, 0)
                if dirichlet:
                    F[:, 0] = 0.0
                    F[:, -1] = 0.0
                update += F
            rho = rho + k * update
            t = target if k == remaining else t + k
            step += 1

            if not _simplex_ok(rho):
                msg = f"simplex violated at step {step}, t={t:.6g}: min={rho.min():.3g} max_sum={rho.sum(axis=0).max():.3g}"
                if on_violation == "raise":
                    raise SimplexViolationError(msg)
                log.warning(kv("simplex_violation", step=step, t=t))

            state = PdeState(rho, t, mesh)
            for m in monitors:
                m.observe(state)
            if record_every > 0 and step % record_every == 0 and t != target:
                traj.states.append(state)
        traj.states.append(state)

    traj.steps = step
    log.info(kv("pde_solved", d=d, mode=mode, h=h, dt=dt, T=T, steps=step))
    return traj


# ------------------------
# functionals of a state


def pde_pairing(state: PdeState, G_hat: Sequence, t: float | None = None) -> float:
    """sum_i int rho_i G_i du by trapezoid on the mesh."""
    mesh = state.mesh
    tt = state.t if t is None else t
    total = 0.0
    for i, G in enumerate(G_hat):
        g = G.value(mesh.points, tt).reshape(mesh.shape)
        total += mesh.integrate(state.rho[i] * g)
    return total


def gradient(state: PdeState) -> np.ndarray:
    """Centered differences, shape (3, d, *mesh.shape); one-sided second order at pinned ends."""
    mesh = state.mesh
    rho = state.rho
    out = np.empty((3, mesh.d) + mesh.shape)
    if mesh.mode == "torus":
        out[:, 0] = (np.roll(rho, -1, axis=1) - np.roll(rho, 1, axis=1)) / (2.0 * mesh.h)
    else:
        out[:, 0] = np.gradient(rho, mesh.h, axis=1, edge_order=2)
    if mesh.d == 2:
        out[:, 1] = (np.roll(rho, -1, axis=2) - np.roll(rho, 1, axis=2)) / (2.0 * mesh.h)
    return out


def flux_pairing(state: PdeState, G_vec: Sequence, t: float | None = None) -> float:
    """sum_i int (-grad rho_i) . G_i du."""
    mesh = state.mesh
    tt = state.t if t is None else t
    grad = gradient(state)
    total = 0.0
    for i, G in enumerate(G_vec):
        g = G.value(mesh.points, tt)  # (n_nodes, d)
        for j in range(mesh.d):
            total -= mesh.integrate(grad[i, j] * g[:, j].reshape(mesh.shape))
    return total


def reaction_pairing(state: PdeState, H_hat: Sequence, params: ModelParams, t: float | None = None) -> float:
    """sum_i int F_i(rho) H_i du."""
    mesh = state.mesh
    tt = state.t if t is None else t
    F = reaction_F(state.node_values(), params, mesh.d, slack=None)
    total = 0.0
    for i, H in enumerate(H_hat):
        total += mesh.integrate((F[:, i] * H.value(mesh.points, tt)).reshape(mesh.shape))
    return total


class TimeIntegral:
    """Trapezoid rule in time for fn(state), fed one state at a time."""

    def __init__(self, fn: Callable[[PdeState], float]):
        self.fn = fn
        self.value = 0.0
        self._last: tuple[float, float] | None = None

    def observe(self, state: PdeState) -> None:
        y = float(self.fn(state))
        if self._last is not None:
            t0, y0 = self._last
            self.value += 0.5 * (state.t - t0) * (y0 + y)
        self._last = (state.t, y)


def mass(state: PdeState) -> float:
    """int (rho1 + rho2 + rho3) du."""
    return state.mesh.integrate(state.rho.sum(axis=0))
