# cprsutils/hydro/config/model_params.py
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from numbers import Real
from typing import Any, Dict, Tuple

from cprsutils.hydro.errors import SpecValidationError
from cprsutils.hydro.logging_utils import get_logger, kv

log = get_logger(__name__)

Triple = Tuple[Real, Real, Real]


def _as_triple(v: Any, what: str) -> Triple:
    if isinstance(v, str):
        v = v.split("/")
    t = tuple(v)
    if len(t) != 3:
        raise SpecValidationError(f"{what} must have three components, got {v!r}")
    return tuple(_as_number(x, what) for x in t)  # type: ignore[return-value]


def _as_number(x: Any, what: str) -> Real:
    if isinstance(x, (int, float, Fraction)):
        return x
    try:
        return float(x)
    except (TypeError, ValueError):
        raise SpecValidationError(f"{what}: not a number: {x!r}") from None


def _check_reservoir(b: Triple, side: str) -> None:
    for x in b:
        if not math.isfinite(float(x)) or x < 0 or x > 1:
            raise SpecValidationError(f"reservoir density on the {side} side outside [0,1]: {b}")
    b0 = 1 - sum(b)
    if b0 < 0:
        raise SpecValidationError(f"reservoir densities on the {side} side sum above 1: {b}")
    if b0 == 0 or any(x == 0 for x in b):
        log.warning(kv("reservoir_on_simplex_face", side=side, b=b))


@dataclass(frozen=True)
class BoundaryProfile:
    """
    Reservoir densities (b1, b2, b3) at u1 = -1 (left) and u1 = +1 (right),
    constant along the transverse torus. b0 = 1 - b1 - b2 - b3.
    """
    left: Triple
    right: Triple

    def __post_init__(self) -> None:
        object.__setattr__(self, "left", _as_triple(self.left, "b_left"))
        object.__setattr__(self, "right", _as_triple(self.right, "b_right"))
        _check_reservoir(self.left, "left")
        _check_reservoir(self.right, "right")

    @classmethod
    def constant(cls, b: Triple) -> "BoundaryProfile":
        return cls(tuple(b), tuple(b))  # type: ignore[arg-type]

    def at(self, side: int) -> Triple:
        """side=-1 for the left edge, +1 for the right edge."""
        return self.left if side < 0 else self.right

    def full(self, side: int) -> Tuple[Real, Real, Real, Real]:
        """(b0, b1, b2, b3) on one side."""
        b = self.at(side)
        return (1 - sum(b), b[0], b[1], b[2])

    def to_dict(self) -> Dict[str, Any]:
        return {"left": [float(x) for x in self.left], "right": [float(x) for x in self.right]}

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "BoundaryProfile":
        return cls(tuple(d["left"]), tuple(d["right"]))  # type: ignore[arg-type]


@dataclass(frozen=True)
class ModelParams:
    """
    Rates of the process. Numbers are kept as given (int, float or
    Fraction) so exact-arithmetic rate checks stay exact.
    """
    lambda1: Real
    lambda2: Real
    r: Real
    b_hat: BoundaryProfile = field(default_factory=lambda: BoundaryProfile((0, 0, 0), (0, 0, 0)))
    scale_N: int = 1

    reaction_on: bool = True
    exchange_on: bool = True
    boundary_on: bool = True

    def __post_init__(self) -> None:
        for name in ("lambda1", "lambda2", "r"):
            v = _as_number(getattr(self, name), name)
            if not math.isfinite(float(v)) or v < 0:
                raise SpecValidationError(f"{name} must be a finite rate >= 0, got {v!r}")
            object.__setattr__(self, name, v)
        if int(self.scale_N) != self.scale_N or self.scale_N < 1:
            raise SpecValidationError(f"scale_N must be a positive integer, got {self.scale_N!r}")
        if self.lambda2 >= self.lambda1 and self.lambda2 > 0:
            log.warning(kv("lambda2_not_below_lambda1", lambda1=self.lambda1, lambda2=self.lambda2))

    @property
    def n2(self) -> int:
        return int(self.scale_N) ** 2

    def reaction_bound(self, d: int) -> Real:
        """Upper bound on the total reaction rate at one site."""
        return max(self.r, 1) + max(2 * d * max(self.lambda1, self.lambda2), 1)

    def with_scale(self, N: int) -> "ModelParams":
        return replace(self, scale_N=N)

    def as_float(self) -> "ModelParams":
        b = self.b_hat
        return replace(
            self,
            lambda1=float(self.lambda1),
            lambda2=float(self.lambda2),
            r=float(self.r),
            b_hat=BoundaryProfile(
                tuple(float(x) for x in b.left), tuple(float(x) for x in b.right)  # type: ignore[arg-type]
            ),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda1": float(self.lambda1),
            "lambda2": float(self.lambda2),
            "r": float(self.r),
            "b_hat": self.b_hat.to_dict(),
            "scale_N": int(self.scale_N),
            "reaction_on": self.reaction_on,
            "exchange_on": self.exchange_on,
            "boundary_on": self.boundary_on,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "ModelParams":
        return cls(
            lambda1=d["lambda1"],
            lambda2=d["lambda2"],
            r=d["r"],
            b_hat=BoundaryProfile.from_dict(d["b_hat"]),
            scale_N=int(d.get("scale_N", 1)),
            reaction_on=bool(d.get("reaction_on", True)),
            exchange_on=bool(d.get("exchange_on", True)),
            boundary_on=bool(d.get("boundary_on", True)),
        )
