# cprsutils/hydro/spectral/modes.py
"""
Dirichlet eigenbasis of -d^2/du^2 on (-1, 1):

    phi_n(u) = sin(n pi (u + 1) / 2),   alpha_n = (n pi / 2)^2,   n >= 1

The phi_n are orthonormal in L^2(-1, 1) as written (the interval has length 2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft


@dataclass(frozen=True)
class DirichletMode:
    n: int

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"mode index must be an integer >= 1, got {self.n}")

    @property
    def alpha(self) -> float:
        return (self.n * math.pi / 2.0) ** 2

    def phi(self, u) -> np.ndarray:
        return basis_matrix(np.atleast_1d(np.asarray(u, dtype=float)), self.n)[:, -1]

    def d2phi(self, u) -> np.ndarray:
        return -self.alpha * self.phi(u)


def dirichlet_mode(n: int) -> DirichletMode:
    return DirichletMode(n)


def eigenvalues(M: int) -> np.ndarray:
    """alpha_1..alpha_M."""
    return (np.arange(1, M + 1) * math.pi / 2.0) ** 2


def basis_matrix(u: np.ndarray, M: int) -> np.ndarray:
    """(len(u), M) with column n-1 = phi_n(u); exactly 0 at u = +-1."""
    u = np.asarray(u, dtype=float).ravel()
    n = np.arange(1, M + 1)
    B = np.sin(np.outer((u + 1.0) * (math.pi / 2.0), n))
    B[np.abs(np.abs(u) - 1.0) < 1e-14] = 0.0
    return B


def heat_propagate(coeffs, dt: float) -> np.ndarray:
    """Multiply coefficient n (last axis, n = 1..M) by exp(-alpha_n dt)."""
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    c = np.asarray(coeffs, dtype=float)
    return c * np.exp(-eigenvalues(c.shape[-1]) * dt)


def projection_grid(J: int) -> np.ndarray:
    """J interior nodes u_k = -1 + 2k/(J+1), k = 1..J."""
    return -1.0 + 2.0 * np.arange(1, J + 1) / (J + 1)


def project(values, M: int) -> np.ndarray:
    """
    <f, phi_n> for n = 1..M from samples of f on projection_grid(J) (last axis),
    by the type-I sine transform. f is taken to vanish at +-1.
    """
    v = np.asarray(values, dtype=float)
    J = v.shape[-1]
    if J < M:
        raise ValueError(f"need at least {M} samples to project on {M} modes, got {J}")
    h = 2.0 / (J + 1)
    y = sfft.dst(v, type=1, axis=-1)
    return 0.5 * h * y[..., :M]


def reconstruct(coeffs, u) -> np.ndarray:
    """sum_n c_n phi_n(u); coeffs on the last axis, result (..., len(u))."""
    c = np.asarray(coeffs, dtype=float)
    B = basis_matrix(u, c.shape[-1])
    return c @ B.T
