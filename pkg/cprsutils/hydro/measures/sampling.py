from __future__ import annotations

from typing import Callable

import numpy as np

from cprsutils.hydro.engine.rng import STREAM_INITIAL, replica_rng
from cprsutils.hydro.errors import SimplexViolationError, SpecValidationError
from cprsutils.lattice.core import Configuration, Geometry

from .profiles import check_simplex


def sample_product_measure(
    profile: Callable[[np.ndarray], np.ndarray],
    geometry: Geometry,
    seed: int,
    *,
    replica_id: int = 0,
) -> Configuration:
    """
    Independent sites; site x is in state i with probability rho_i(x/N) and
    empty with probability 1 - sum rho_i(x/N).
    """
    rho = np.asarray(profile(geometry.macro_coords), dtype=float)
    if rho.shape != (geometry.n_sites, 3):
        raise SpecValidationError(f"profile must return shape ({geometry.n_sites}, 3), got {rho.shape}")
    try:
        check_simplex(rho)
    except SimplexViolationError as e:
        raise SpecValidationError(str(e)) from None

    cum = np.cumsum(rho, axis=1)
    u = replica_rng(seed, replica_id, STREAM_INITIAL).random(geometry.n_sites)
    states = np.zeros(geometry.n_sites, dtype=np.uint8)
    states[u < cum[:, 2]] = 3
    states[u < cum[:, 1]] = 2
    states[u < cum[:, 0]] = 1
    return Configuration(geometry, bytearray(states.tobytes()))
