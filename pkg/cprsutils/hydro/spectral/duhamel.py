# cprsutils/hydro/spectral/duhamel.py
"""
Mild-form solver for the d = 1 reservoir system.

rho = L + v with L the affine lift of the reservoir values, so v vanishes
at u = +-1 and its sine coefficients solve

    c_n' = -alpha_n c_n + <F(L + v), phi_n>.

On a uniform time grid the Duhamel integral is taken with F linear between
nodes (exponential trapezoid):

    c(t + k) = e^{-a} c(t) + k g2(a) F(t) + k (g1(a) - g2(a)) F(t + k),   a = alpha k

with g1(a) = (1 - e^{-a}) / a and g2(a) = (1 - e^{-a}(1 + a)) / a^2. The
whole-window trajectory is iterated to a fixed point (Picard), windows are
chained, and the time grid is halved until the answer stops moving.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Tuple

import numpy as np

from cprsutils.hydro.config.model_params import BoundaryProfile, ModelParams
from cprsutils.hydro.errors import NonConvergenceError, SpecValidationError
from cprsutils.hydro.logging_utils import get_logger, kv
from cprsutils.hydro.measures.profiles import lift as affine_lift
from cprsutils.hydro.pde.reaction import reaction_F

from .modes import basis_matrix, eigenvalues, project, projection_grid

log = get_logger(__name__)

SMALL_A = 1e-3


def _g_weights(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    small = a < SMALL_A
    safe = np.where(small, 1.0, a)
    em = np.exp(-safe)
    g1 = np.where(small, 1.0 - a / 2.0 + a * a / 6.0 - a ** 3 / 24.0, (1.0 - em) / safe)
    g2 = np.where(
        small,
        0.5 - a / 3.0 + a * a / 8.0 - a ** 3 / 30.0,
        (1.0 - em * (1.0 + safe)) / (safe * safe),
    )
    return g1, g2


@dataclass
class SpectralSolution:
    """
    coeffs[k, i, n-1]: sine coefficient of rho_{i+1} - L_{i+1} on mode n at times[k].
    """
    times: np.ndarray
    coeffs: np.ndarray
    b_hat: BoundaryProfile
    M_modes: int
    picard_iterations: List[int] = field(default_factory=list)
    refinements: int = 0

    def lift(self, u) -> np.ndarray:
        """(n, 3) affine lift at points u."""
        return affine_lift(self.b_hat)(np.asarray(u, dtype=float).ravel())

    def coeffs_at(self, t: float) -> np.ndarray:
        """(3, M) at time t; linear in time between grid nodes."""
        if t < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise ValueError(f"t={t} outside [{self.times[0]}, {self.times[-1]}]")
        k = int(np.searchsorted(self.times, t))
        if k < len(self.times) and abs(self.times[k] - t) <= 1e-12:
            return self.coeffs[k]
        k = min(max(k, 1), len(self.times) - 1)
        t0, t1 = self.times[k - 1], self.times[k]
        w = (t - t0) / (t1 - t0)
        return (1.0 - w) * self.coeffs[k - 1] + w * self.coeffs[k]

    def evaluate(self, t: float, u) -> np.ndarray:
        """(n, 3) densities at points u (1-d array of u1)."""
        u = np.asarray(u, dtype=float).ravel()
        c = self.coeffs_at(t)
        return self.lift(u) + (c @ basis_matrix(u, self.M_modes).T).T


class _Problem:
    def __init__(self, b_hat: BoundaryProfile, params: ModelParams, M: int):
        self.params = params
        self.M = M
        self.J = 4 * M
        self.u = projection_grid(self.J)
        self.B = basis_matrix(self.u, M)  # (J, M)
        self.L = affine_lift(b_hat)(self.u)  # (J, 3)
        self.alpha = eigenvalues(M)
        self.react = bool(params.reaction_on)

    def forcing(self, C: np.ndarray) -> np.ndarray:
        """<F(L + v), phi_n> for a stack of coefficient arrays (..., 3, M)."""
        if not self.react:
            return np.zeros_like(C)
        v = C @ self.B.T                       # (..., 3, J)
        rho = self.L.T + v                     # (..., 3, J)
        F = reaction_F(np.moveaxis(rho, -2, -1), self.params, 1, slack=None)
        return project(np.moveaxis(F, -1, -2), self.M)


def _window(
    prob: _Problem, c0: np.ndarray, length: float, steps: int, picard: int, tol: float
) -> Tuple[np.ndarray, int]:
    k = length / steps
    decay = np.exp(-prob.alpha * k)
    g1, g2 = _g_weights(prob.alpha * k)
    w_now, w_next = k * g2, k * (g1 - g2)

    C = np.broadcast_to(c0, (steps + 1,) + c0.shape).copy()
    for it in range(1, picard + 1):
        F = prob.forcing(C)
        new = np.empty_like(C)
        new[0] = c0
        for j in range(steps):
            new[j + 1] = decay * new[j] + w_now * F[j] + w_next * F[j + 1]
        # |phi_n| <= 1, so the l1 norm over modes bounds the sup norm in u
        change = float(np.max(np.sum(np.abs(new - C), axis=-1)))
        C = new
        if change < tol:
            return C, it
    raise NonConvergenceError(f"Picard iteration did not reach tol={tol:g} within {picard} iterations")


def _solve_grid(
    prob: _Problem, c0: np.ndarray, T: float, window: float | None, steps_per_window: int, picard: int, tol: float
) -> Tuple[np.ndarray, np.ndarray, List[int]]:
    edges = [0.0]
    if window is None or window >= T:
        edges.append(T)
    else:
        n_win = int(math.ceil(T / window - 1e-12))
        edges.extend(min(T, window * (w + 1)) for w in range(n_win))
    times: List[np.ndarray] = [np.array([0.0])]
    coeffs: List[np.ndarray] = [c0[None]]
    iters: List[int] = []
    c = c0
    for a, b in zip(edges[:-1], edges[1:]):
        C, it = _window(prob, c, b - a, steps_per_window, picard, tol)
        times.append(np.linspace(a, b, steps_per_window + 1)[1:])
        coeffs.append(C[1:])
        iters.append(it)
        c = C[-1]
    return np.concatenate(times), np.concatenate(coeffs), iters


def duhamel_solve(
    gamma: Callable[[np.ndarray], np.ndarray],
    b_hat: BoundaryProfile,
    params: ModelParams,
    T: float,
    M_modes: int = 64,
    picard: int = 50,
    tol: float = 1e-6,
    *,
    d: int = 1,
    window: float | None = 0.05,
    steps_per_window: int = 8,
    max_refine: int = 10,
) -> SpectralSolution:
    """
    gamma maps (n, 1) points to (n, 3) densities. The time grid starts at
    `steps_per_window` steps per window and is halved until two successive
    grids agree within tol/10 at the coarse nodes. `window=None` runs one
    Picard iteration over the whole horizon. Picard stops once successive
    iterates differ by less than tol/100.
    """
    if d != 1:
        raise SpecValidationError("the spectral solver covers d=1 only")
    if not params.exchange_on:
        raise SpecValidationError("the spectral solver needs the diffusion (exchange) term")
    if not params.boundary_on:
        raise SpecValidationError("the spectral solver imposes the reservoir values; boundary must be on")
    if T <= 0:
        raise SpecValidationError(f"T must be > 0, got {T}")
    if M_modes < 1 or picard < 1 or steps_per_window < 1:
        raise SpecValidationError("M_modes, picard and steps_per_window must be >= 1")
    if window is not None and window <= 0:
        raise SpecValidationError(f"window must be > 0, got {window}")

    prob = _Problem(b_hat, params, M_modes)
    rho0 = np.asarray(gamma(prob.u[:, None]), dtype=float)
    if rho0.shape != (prob.J, 3):
        raise SpecValidationError(f"initial profile must return shape ({prob.J}, 3), got {rho0.shape}")
    c0 = project((rho0 - prob.L).T, M_modes)

    steps = steps_per_window
    times, coeffs, iters = _solve_grid(prob, c0, T, window, steps, picard, tol / 100.0)
    for level in range(1, max_refine + 1):
        steps *= 2
        f_times, f_coeffs, f_iters = _solve_grid(prob, c0, T, window, steps, picard, tol / 100.0)
        # coarse nodes are every other fine node
        change = float(np.max(np.sum(np.abs(f_coeffs[::2] - coeffs), axis=-1)))
        times, coeffs, iters = f_times, f_coeffs, f_iters
        log.debug(kv("duhamel_refine", level=level, steps_per_window=steps, change=change))
        if change < tol / 10.0:
            log.info(kv("duhamel_solved", T=T, M=M_modes, steps_per_window=steps, picard_max=max(iters)))
            return SpectralSolution(times, coeffs, b_hat, M_modes, iters, level)
    raise NonConvergenceError(f"time grid still moving after {max_refine} refinements (last change {change:.3g})")
