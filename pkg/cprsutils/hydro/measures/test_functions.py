# cprsutils/hydro/measures/test_functions.py
"""
Closed-form test functions on [-1, 1] x (transverse torus), identified by
name so experiment files stay plain text.

Scalar names (all depend on u1 only):
    zero
    one
    sine:k                 sin(k pi (u1+1)/2)
    bump:c:w               psi((u1-c)/w), psi(s) = exp(-1/(1-s^2)) on |s|<1
    polybump:c:w:a0:a1..   (a0 + a1 u1 + ...) * psi((u1-c)/w)
A trailing "@c" multiplies by exp(-c t), e.g. "sine:1@2.5".

Triples are written "G1/G2/G3". Vector fields (for currents) join their d
components with "|", e.g. "bump:0:0.5|zero".
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np

ArrayFn = Callable[[np.ndarray], np.ndarray]


def as_points(u: np.ndarray) -> np.ndarray:
    """Coerce to an (n, d) float array; a 1-d array is read as n values of u1."""
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        return u.reshape(1, 1)
    if u.ndim == 1:
        return u[:, None]
    return u


def _psi_derivs(s: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """psi, psi', psi'' of the standard bump, zero outside |s| < 1."""
    # psi < 1e-200 where 1 - s^2 < 2e-3; treat as zero to keep q**4 finite
    inside = (1.0 - s * s) > 2e-3
    psi = np.zeros_like(s, dtype=float)
    d1 = np.zeros_like(psi)
    d2 = np.zeros_like(psi)
    si = s[inside]
    q = 1.0 - si * si
    p = np.exp(-1.0 / q)
    psi[inside] = p
    d1[inside] = p * (-2.0 * si / q**2)
    d2[inside] = p * (4.0 * si**2 / q**4 - 2.0 / q**2 - 8.0 * si**2 / q**3)
    return psi, d1, d2


@dataclass(frozen=True)
class Profile1D:
    """f(u1) with first and second derivatives and a support interval."""
    f: ArrayFn
    df: ArrayFn
    d2f: ArrayFn
    support: Tuple[float, float] | None  # None = empty support


def _zeros(u: np.ndarray) -> np.ndarray:
    return np.zeros_like(u, dtype=float)


def _zero() -> Profile1D:
    return Profile1D(_zeros, _zeros, _zeros, None)


def _one() -> Profile1D:
    return Profile1D(lambda u: np.ones_like(u, dtype=float), _zeros, _zeros, (-math.inf, math.inf))


def _sine(k: int) -> Profile1D:
    if k < 1:
        raise ValueError(f"sine mode index must be >= 1, got {k}")
    w = k * math.pi / 2.0
    return Profile1D(
        lambda u: np.sin(w * (u + 1.0)),
        lambda u: w * np.cos(w * (u + 1.0)),
        lambda u: -(w**2) * np.sin(w * (u + 1.0)),
        (-1.0, 1.0),
    )


def _polybump(c: float, width: float, coeffs: Sequence[float]) -> Profile1D:
    if width <= 0:
        raise ValueError(f"bump width must be > 0, got {width}")
    poly = np.polynomial.Polynomial(list(coeffs) or [1.0])
    dpoly = poly.deriv(1)
    d2poly = poly.deriv(2)

    def parts(u: np.ndarray):
        return _psi_derivs((u - c) / width)

    def f(u):
        psi, _, _ = parts(u)
        return poly(u) * psi

    def df(u):
        psi, p1, _ = parts(u)
        return dpoly(u) * psi + poly(u) * p1 / width

    def d2f(u):
        psi, p1, p2 = parts(u)
        return d2poly(u) * psi + 2.0 * dpoly(u) * p1 / width + poly(u) * p2 / width**2

    return Profile1D(f, df, d2f, (c - width, c + width))


@dataclass(frozen=True)
class TestFunction:
    """
    Scalar G(t, u) = exp(-decay t) * g(u1) on the macroscopic domain.

    `u` arguments are arrays of shape (n, d); results have shape (n,).
    """
    __test__ = False  # not a pytest class

    name: str
    shape: Profile1D
    decay: float = 0.0

    def _tf(self, t: float) -> float:
        return math.exp(-self.decay * t) if self.decay else 1.0

    def value(self, u: np.ndarray, t: float = 0.0) -> np.ndarray:
        u = as_points(u)
        out = self._tf(t) * self.shape.f(u[:, 0])
        return self._clip_support(u, out)

    def dt(self, u: np.ndarray, t: float = 0.0) -> np.ndarray:
        return -self.decay * self.value(u, t)

    def grad(self, u: np.ndarray, t: float = 0.0) -> np.ndarray:
        """Shape (n, d); only the e1 component can be nonzero."""
        u = as_points(u)
        g = np.zeros_like(u, dtype=float)
        g[:, 0] = self._clip_support(u, self._tf(t) * self.shape.df(u[:, 0]))
        return g

    def laplacian(self, u: np.ndarray, t: float = 0.0) -> np.ndarray:
        u = as_points(u)
        return self._clip_support(u, self._tf(t) * self.shape.d2f(u[:, 0]))

    def _clip_support(self, u: np.ndarray, vals: np.ndarray) -> np.ndarray:
        sup = self.shape.support
        if sup is None:
            return np.zeros_like(vals)
        a, b = sup
        return np.where((u[:, 0] >= a) & (u[:, 0] <= b), vals, 0.0)

    @property
    def support(self) -> Tuple[float, float] | None:
        return self.shape.support

    @property
    def boundary_vanishing(self) -> bool:
        """True when G(t, +-1, .) = 0 for all t."""
        sup = self.shape.support
        if sup is None:
            return True
        if self.name.split("@")[0].startswith("sine:"):
            return True
        a, b = sup
        return a >= -1.0 and b <= 1.0


def parse_test_function(name: str) -> TestFunction:
    name = name.strip()
    base, _, decay_s = name.partition("@")
    decay = float(decay_s) if decay_s else 0.0
    head, *args = base.split(":")
    try:
        if head == "zero" and not args:
            shape = _zero()
        elif head == "one" and not args:
            shape = _one()
        elif head == "sine" and len(args) == 1:
            shape = _sine(int(args[0]))
        elif head == "bump" and len(args) == 2:
            shape = _polybump(float(args[0]), float(args[1]), [1.0])
        elif head == "polybump" and len(args) >= 3:
            shape = _polybump(float(args[0]), float(args[1]), [float(a) for a in args[2:]])
        else:
            raise ValueError(f"unknown test function: {name!r}")
    except (TypeError, ValueError) as e:
        raise ValueError(f"bad test function {name!r}: {e}") from None
    return TestFunction(name=name, shape=shape, decay=decay)


def parse_triple(text: str) -> Tuple[TestFunction, TestFunction, TestFunction]:
    parts = text.split("/")
    if len(parts) != 3:
        raise ValueError(f"test-function triple needs three '/'-separated names: {text!r}")
    return tuple(parse_test_function(p) for p in parts)  # type: ignore[return-value]


@dataclass(frozen=True)
class VectorTestFunction:
    """G: domain -> R^d, one scalar TestFunction per direction."""
    __test__ = False

    components: Tuple[TestFunction, ...]

    @property
    def name(self) -> str:
        return "|".join(c.name for c in self.components)

    def value(self, u: np.ndarray, t: float = 0.0) -> np.ndarray:
        """Shape (n, d)."""
        u = as_points(u)
        return np.stack([c.value(u, t) for c in self.components], axis=1)


def parse_vector(text: str, d: int) -> VectorTestFunction:
    comps = text.split("|")
    if len(comps) == 1 and d > 1:
        comps = comps + ["zero"] * (d - 1)
    if len(comps) != d:
        raise ValueError(f"vector test function needs {d} components: {text!r}")
    return VectorTestFunction(tuple(parse_test_function(c) for c in comps))


def parse_vector_triple(text: str, d: int) -> Tuple[VectorTestFunction, VectorTestFunction, VectorTestFunction]:
    parts = text.split("/")
    if len(parts) != 3:
        raise ValueError(f"vector triple needs three '/'-separated fields: {text!r}")
    return tuple(parse_vector(p, d) for p in parts)  # type: ignore[return-value]
