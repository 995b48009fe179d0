from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from cprsutils.hydro.config.model_params import BoundaryProfile
from cprsutils.hydro.errors import SimplexViolationError

from .test_functions import as_points


@dataclass(frozen=True)
class DensityProfile:
    """
    A density triple (rho1, rho2, rho3) as a function of u1.
    Calling it on (n, d) points returns an (n, 3) array.

    Names:
        constant:a:b:c
        linear                 affine interpolation of the reservoir values
        sine:a1:a2:a3[:k]      linear + (a1, a2, a3) * sin(k pi (u1+1)/2), k = 1 by default
    """
    name: str
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return self.fn(as_points(u)[:, 0])


def lift(b_hat: BoundaryProfile) -> Callable[[np.ndarray], np.ndarray]:
    left = np.array([float(x) for x in b_hat.left])
    right = np.array([float(x) for x in b_hat.right])

    def fn(u1: np.ndarray) -> np.ndarray:
        w = (1.0 + np.asarray(u1, dtype=float))[:, None] / 2.0
        return (1.0 - w) * left + w * right

    return fn


def make_profile(name: str, b_hat: BoundaryProfile) -> DensityProfile:
    head, *args = name.strip().split(":")
    if head == "constant":
        if len(args) != 3:
            raise ValueError(f"constant profile needs three values: {name!r}")
        rho = np.array([float(a) for a in args])
        return DensityProfile(name, lambda u1: np.tile(rho, (len(u1), 1)))
    if head == "linear" and not args:
        return DensityProfile(name, lift(b_hat))
    if head == "sine" and len(args) in (3, 4):
        amp = np.array([float(a) for a in args[:3]])
        k = int(args[3]) if len(args) == 4 else 1
        base = lift(b_hat)
        w = k * math.pi / 2.0
        return DensityProfile(name, lambda u1: base(u1) + np.sin(w * (u1 + 1.0))[:, None] * amp)
    raise ValueError(f"unknown profile: {name!r}")


def check_simplex(rho: np.ndarray, *, tol: float = 1e-12, what: str = "profile") -> None:
    """rho has the three densities on its last axis."""
    rho = np.asarray(rho, dtype=float)
    if not np.all(np.isfinite(rho)):
        raise SimplexViolationError(f"{what} has non-finite densities")
    lo = float(rho.min()) if rho.size else 0.0
    hi = float(rho.sum(axis=-1).max()) if rho.size else 0.0
    if lo < -tol or hi > 1.0 + tol:
        raise SimplexViolationError(f"{what} leaves the simplex: min={lo:.3g} max_sum={hi:.3g}")
