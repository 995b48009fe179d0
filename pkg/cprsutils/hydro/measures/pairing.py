from __future__ import annotations

from typing import Literal, Sequence

import numpy as np

from cprsutils.lattice.core import Configuration, Geometry

from .ledger import CurrentLedger
from .test_functions import TestFunction, VectorTestFunction


def empirical_pairing(config: Configuration, G_hat: Sequence[TestFunction], t: float = 0.0) -> float:
    """N^-d sum_i sum_x G_i(t, x/N) eta_i(x)."""
    g = config.geometry
    u = g.macro_coords
    arr = config.as_array()
    total = 0.0
    for i, G in enumerate(G_hat, start=1):
        mask = arr == i
        if mask.any():
            total += float(G.value(u[mask], t).sum())
    return total / g.scale ** g.d


def _bond_starts(geometry: Geometry) -> tuple[np.ndarray, np.ndarray]:
    bonds = geometry.bond_table
    xs = np.array([b[0] for b in bonds], dtype=np.int64)
    js = np.array([b[2] for b in bonds], dtype=np.int64) - 1
    return xs, js


def current_pairing(ledger: CurrentLedger, G_vec: Sequence[VectorTestFunction], t: float = 0.0) -> float:
    """N^-(d+1) sum_i sum_j sum_{bonds along e_j} W(bond, i) G_{i,j}(x/N), x the bond's start."""
    g = ledger.geometry
    if not g.bond_table:
        return 0.0
    xs, js = _bond_starts(g)
    u = g.macro_coords[xs]
    total = 0.0
    for i, G in enumerate(G_vec):
        vals = G.value(u, t)[np.arange(len(xs)), js]
        total += float(np.dot(ledger.W[:, i], vals))
    return total / g.scale ** (g.d + 1)


def creation_pairing(
    ledger: CurrentLedger,
    H_hat: Sequence[TestFunction],
    t: float = 0.0,
    which: Literal["bulk", "boundary", "both"] = "bulk",
) -> float:
    """N^-d sum_i sum_x Q(x, i) H_i(x/N)."""
    g = ledger.geometry
    if which == "bulk":
        Q = ledger.Q_bulk
    elif which == "boundary":
        Q = ledger.Q_boundary
    elif which == "both":
        Q = ledger.Q_bulk + ledger.Q_boundary
    else:
        raise ValueError(f"which must be bulk, boundary or both, got {which!r}")
    u = g.macro_coords
    total = 0.0
    for i, H in enumerate(H_hat):
        total += float(np.dot(Q[:, i], H.value(u, t)))
    return total / g.scale ** g.d
