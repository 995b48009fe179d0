from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Literal, Tuple

import numpy as np

BoundaryMode = Literal["reservoirs", "torus"]

# Per-site states. A state packs (xi, omega) as xi + 2*omega.
EMPTY, WILD, STERILE, BOTH = 0, 1, 2, 3
STATES = (EMPTY, WILD, STERILE, BOTH)


def encode(xi: int, omega: int) -> int:
    if xi not in (0, 1) or omega not in (0, 1):
        raise ValueError(f"xi and omega must be bits, got ({xi}, {omega})")
    return xi + 2 * omega


def decode(state: int) -> Tuple[int, int]:
    if state not in STATES:
        raise ValueError(f"state must be one of 0..3, got {state}")
    return state & 1, state >> 1


@dataclass(frozen=True)
class Geometry:
    """
    Strip {-N..N} x (transverse torus)^(d-1), or the same box with every
    direction periodic (torus mode, no reservoirs).

    Sites are indexed row-major with e1 fastest:
        index = k + axial_len * t
    where k in [0, axial_len) runs along e1 and t in [0, transverse_len)
    along the transverse direction (d == 2 only).

    axial_len defaults to 2N+1; tiny oracle lattices may override it
    (e.g. 2 sites along e1).
    """
    d: int
    N: int
    transverse_len: int = 1
    boundary_mode: BoundaryMode = "reservoirs"
    axial_len: int | None = None

    def __post_init__(self) -> None:
        if self.d not in (1, 2):
            raise ValueError(f"only d=1 and d=2 are supported, got d={self.d}")
        if self.N < 0:
            raise ValueError(f"N must be >= 0, got {self.N}")
        if self.boundary_mode not in ("reservoirs", "torus"):
            raise ValueError(f"unknown boundary_mode: {self.boundary_mode}")
        if self.axial_len is not None and self.axial_len < 1:
            raise ValueError(f"axial_len must be >= 1, got {self.axial_len}")
        if self.d == 1 and self.transverse_len != 1:
            raise ValueError("transverse_len must be 1 when d=1")
        if self.d == 2 and self.transverse_len < 3:
            # a 2-cycle would double-count its single bond
            raise ValueError(f"transverse_len must be >= 3 when d=2, got {self.transverse_len}")

    # ------------------------
    # sizes

    @property
    def n_axial(self) -> int:
        return self.axial_len if self.axial_len is not None else 2 * self.N + 1

    @property
    def n_transverse(self) -> int:
        return self.transverse_len if self.d == 2 else 1

    @property
    def n_sites(self) -> int:
        return self.n_axial * self.n_transverse

    @property
    def scale(self) -> float:
        # N = 0 only makes sense for single-site oracle lattices
        return float(self.N) if self.N > 0 else 1.0

    # ------------------------
    # coordinates

    def site_index(self, k: int, t: int = 0) -> int:
        if not (0 <= k < self.n_axial and 0 <= t < self.n_transverse):
            raise ValueError(f"site ({k}, {t}) outside lattice {self.n_axial}x{self.n_transverse}")
        return k + self.n_axial * t

    def axial_coord(self, site: int) -> float:
        """x1 of a site; half-integer when axial_len is even."""
        k = site % self.n_axial
        return k - (self.n_axial - 1) / 2.0

    def transverse_coord(self, site: int) -> int:
        """Centered transverse coordinate in (-L/2, L/2]."""
        t = site // self.n_axial
        L = self.n_transverse
        return t if t <= L // 2 else t - L

    @cached_property
    def macro_coords(self) -> np.ndarray:
        """(n_sites, d) array of macroscopic positions u = x/N."""
        k = np.arange(self.n_sites) % self.n_axial
        u1 = (k - (self.n_axial - 1) / 2.0) / self.scale
        if self.d == 1:
            return u1[:, None]
        t = np.arange(self.n_sites) // self.n_axial
        u2 = t / self.scale
        return np.stack([u1, u2], axis=1)

    @property
    def transverse_period(self) -> float:
        return self.n_transverse / self.scale

    # ------------------------
    # neighbours and bonds

    def _step(self, site: int, axis: int, sign: int) -> int | None:
        k, t = site % self.n_axial, site // self.n_axial
        if axis == 0:
            k2 = k + sign
            if 0 <= k2 < self.n_axial:
                return k2 + self.n_axial * t
            if self.boundary_mode == "torus":
                return (k2 % self.n_axial) + self.n_axial * t
            return None
        t2 = (t + sign) % self.n_transverse
        return k + self.n_axial * t2

    @cached_property
    def neighbor_table(self) -> Tuple[Tuple[int, ...], ...]:
        table = []
        for x in range(self.n_sites):
            out: list[int] = []
            for axis in range(self.d):
                for sign in (-1, 1):
                    y = self._step(x, axis, sign)
                    if y is not None and y != x and y not in out:
                        out.append(y)
            table.append(tuple(out))
        return tuple(table)

    @cached_property
    def bond_table(self) -> Tuple[Tuple[int, int, int], ...]:
        """Unordered nearest-neighbour bonds as (x, x+e_j, j), j = 1..d."""
        seen: set[frozenset[int]] = set()
        bonds = []
        for t in range(self.n_transverse):
            for k in range(self.n_axial):
                x = k + self.n_axial * t
                for axis in range(self.d):
                    y = self._step(x, axis, +1)
                    if y is None or y == x:
                        continue
                    key = frozenset((x, y))
                    if key in seen:
                        continue
                    seen.add(key)
                    bonds.append((x, y, axis + 1))
        return tuple(bonds)

    @cached_property
    def boundary_sites(self) -> Tuple[int, ...]:
        if self.boundary_mode == "torus":
            return ()
        edge = {0, self.n_axial - 1}
        return tuple(x for x in range(self.n_sites) if (x % self.n_axial) in edge)

    @cached_property
    def _boundary_set(self) -> frozenset[int]:
        return frozenset(self.boundary_sites)

    def is_boundary(self, site: int) -> bool:
        return site in self._boundary_set

    def boundary_side(self, site: int) -> int:
        """-1 for the x1 = -N edge, +1 for x1 = +N."""
        if not self.is_boundary(site):
            raise ValueError(f"site {site} is not a boundary site")
        return -1 if site % self.n_axial == 0 else 1

    def in_box(self, site: int, M: int) -> bool:
        """Membership in {-N..N} x {-M..M}^(d-1)."""
        if self.d == 1:
            return True
        return abs(self.transverse_coord(site)) <= M

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "N": self.N,
            "transverse_len": self.transverse_len,
            "boundary_mode": self.boundary_mode,
            "axial_len": self.axial_len,
        }


def neighbors(geometry: Geometry, site: int) -> Tuple[int, ...]:
    if not (0 <= site < geometry.n_sites):
        raise ValueError(f"site {site} outside lattice of {geometry.n_sites} sites")
    return geometry.neighbor_table[site]


def bonds(geometry: Geometry) -> Tuple[Tuple[int, int, int], ...]:
    return geometry.bond_table


@dataclass
class Configuration:
    """
    One state in {0,1,2,3} per site. Held as a bytearray so the simulation
    hot loop indexes plain ints; `packed()` gives the 2-bit form.
    """
    geometry: Geometry
    states: bytearray

    def __post_init__(self) -> None:
        if len(self.states) != self.geometry.n_sites:
            raise ValueError(f"expected {self.geometry.n_sites} states, got {len(self.states)}")
        if any(s > 3 for s in self.states):
            raise ValueError("states must lie in {0,1,2,3}")

    @classmethod
    def filled(cls, geometry: Geometry, state: int = EMPTY) -> "Configuration":
        decode(state)
        return cls(geometry, bytearray([state]) * geometry.n_sites)

    @classmethod
    def from_array(cls, geometry: Geometry, arr: Iterable[int]) -> "Configuration":
        return cls(geometry, bytearray(int(s) for s in arr))

    def copy(self) -> "Configuration":
        return Configuration(self.geometry, bytearray(self.states))

    def as_array(self) -> np.ndarray:
        return np.frombuffer(bytes(self.states), dtype=np.uint8).copy()

    def indicator(self, i: int) -> np.ndarray:
        return (self.as_array() == i).astype(np.int64)

    def xi(self) -> np.ndarray:
        return (self.as_array() & 1).astype(np.int64)

    def omega(self) -> np.ndarray:
        return (self.as_array() >> 1).astype(np.int64)

    def packed(self) -> bytes:
        """Four sites per byte, first site in the low bits."""
        arr = self.as_array()
        pad = (-len(arr)) % 4
        if pad:
            arr = np.concatenate([arr, np.zeros(pad, dtype=np.uint8)])
        quads = arr.reshape(-1, 4)
        return bytes(quads[:, 0] | (quads[:, 1] << 2) | (quads[:, 2] << 4) | (quads[:, 3] << 6))

    @classmethod
    def from_packed(cls, geometry: Geometry, data: bytes) -> "Configuration":
        raw = np.frombuffer(data, dtype=np.uint8)
        arr = np.stack([(raw >> s) & 3 for s in (0, 2, 4, 6)], axis=1).ravel()
        return cls(geometry, bytearray(arr[: geometry.n_sites].tolist()))

    def state_index(self) -> int:
        """Base-4 index with site 0 as least significant digit (oracle ordering)."""
        idx = 0
        for s in reversed(self.states):
            idx = idx * 4 + s
        return idx

    @classmethod
    def from_state_index(cls, geometry: Geometry, idx: int) -> "Configuration":
        out = bytearray(geometry.n_sites)
        for x in range(geometry.n_sites):
            idx, out[x] = divmod(idx, 4)
        return cls(geometry, out)


def occupancy_counts(config: Configuration) -> Tuple[int, int, int, int]:
    counts = np.bincount(config.as_array(), minlength=4)
    return int(counts[0]), int(counts[1]), int(counts[2]), int(counts[3])
