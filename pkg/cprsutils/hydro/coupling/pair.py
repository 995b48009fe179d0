# cprsutils/hydro/coupling/pair.py
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from cprsutils.lattice.core import Configuration, Geometry


def default_box_M(N: int, d: int) -> int:
    """floor(N^(1 + 1/d)), computed in integers."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if d == 1:
        return N * N
    if d == 2:
        return math.isqrt(N ** 3)
    raise ValueError(f"only d=1 and d=2 are supported, got d={d}")


@dataclass
class CoupledConfiguration:
    """
    left: the box-restricted process (frozen outside the box, births only
    from in-box neighbours); right: the full process. Both live on one
    Geometry and are mutated in place by the coupled engine.
    """
    left: Configuration
    right: Configuration
    box_M: int

    def __post_init__(self) -> None:
        if self.left.geometry != self.right.geometry:
            raise ValueError("coupled copies must share one geometry")
        if self.box_M < 0:
            raise ValueError(f"box_M must be >= 0, got {self.box_M}")

    @classmethod
    def diagonal(cls, config: Configuration, box_M: int) -> "CoupledConfiguration":
        return cls(config.copy(), config.copy(), box_M)

    @property
    def geometry(self) -> Geometry:
        return self.left.geometry

    def copy(self) -> "CoupledConfiguration":
        return CoupledConfiguration(self.left.copy(), self.right.copy(), self.box_M)

    def disagreements(self) -> np.ndarray:
        """Boolean mask of sites where the copies differ."""
        return self.left.as_array() != self.right.as_array()

    def agree(self) -> bool:
        return self.left.states == self.right.states

    def to_dict(self) -> dict:
        return {
            "geometry": self.geometry.to_dict(),
            "box_M": self.box_M,
            "left": self.left.as_array().tolist(),
            "right": self.right.as_array().tolist(),
        }
