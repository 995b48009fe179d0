# cprsutils/hydro/pde/reaction.py
"""
Reaction term of the limit system. With beta = 2d (lambda1 rho1 + lambda2 rho3)
and rho0 = 1 - rho1 - rho2 - rho3:

    F1 = beta rho0 + rho3 - (r + 1) rho1
    F2 = r rho0 + rho3 - beta rho2 - rho2
    F3 = beta rho2 + r rho1 - 2 rho3
"""
from __future__ import annotations

import numpy as np

from cprsutils.hydro.config.model_params import ModelParams
from cprsutils.hydro.errors import SimplexViolationError

SIMPLEX_SLACK = 1e-12


def _check(rho: np.ndarray, slack: float) -> None:
    if rho.shape[-1] != 3:
        raise ValueError(f"densities need a trailing axis of length 3, got shape {rho.shape}")
    if slack is None:
        return
    if (rho < -slack).any() or (rho.sum(axis=-1) > 1.0 + slack).any():
        raise SimplexViolationError("reaction_F evaluated outside the simplex")


def reaction_F(rho, params: ModelParams, d: int, *, slack: float | None = SIMPLEX_SLACK) -> np.ndarray:
    """
    F(rho) on the trailing axis. `slack=None` skips the simplex check (used
    by solvers that run their own check once per step).
    """
    rho = np.asarray(rho, dtype=float)
    _check(rho, slack)
    l1, l2, r = float(params.lambda1), float(params.lambda2), float(params.r)
    r1, r2, r3 = rho[..., 0], rho[..., 1], rho[..., 2]
    r0 = 1.0 - r1 - r2 - r3
    beta = 2 * d * (l1 * r1 + l2 * r3)
    return np.stack(
        [
            beta * r0 + r3 - (r + 1.0) * r1,
            r * r0 + r3 - beta * r2 - r2,
            beta * r2 + r * r1 - 2.0 * r3,
        ],
        axis=-1,
    )


def reaction_jacobian(rho, params: ModelParams, d: int) -> np.ndarray:
    """dF_i/drho_j, shape (..., 3, 3)."""
    rho = np.asarray(rho, dtype=float)
    _check(rho, SIMPLEX_SLACK)
    l1, l2, r = float(params.lambda1), float(params.lambda2), float(params.r)
    r1, r2, r3 = rho[..., 0], rho[..., 1], rho[..., 2]
    r0 = 1.0 - r1 - r2 - r3
    c = 2 * d
    beta = c * (l1 * r1 + l2 * r3)
    J = np.empty(rho.shape[:-1] + (3, 3))
    # d rho0 / d rho_j = -1, d beta / d rho = (c l1, 0, c l2)
    J[..., 0, 0] = c * l1 * r0 - beta - (r + 1.0)
    J[..., 0, 1] = -beta
    J[..., 0, 2] = c * l2 * r0 - beta + 1.0
    J[..., 1, 0] = -r - c * l1 * r2
    J[..., 1, 1] = -r - beta - 1.0
    J[..., 1, 2] = -r + 1.0 - c * l2 * r2
    J[..., 2, 0] = c * l1 * r2 + r
    J[..., 2, 1] = beta
    J[..., 2, 2] = c * l2 * r2 - 2.0
    return J
