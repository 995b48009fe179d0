# cprsutils/hydro/coupling/discrepancy.py
from __future__ import annotations

import numpy as np

from .pair import CoupledConfiguration


def discrepancy_h(pair: CoupledConfiguration, i: int) -> float:
    """
    N^(-d-1) sum_{n=1}^{M-1} exp(-n/N) H_{i,n}, where H_{i,n} counts the
    sites with |x2| <= n at which exactly one copy holds a type-i particle
    (every site counts when d = 1).
    """
    if i not in (1, 2, 3):
        raise ValueError(f"type must be 1, 2 or 3, got {i}")
    g = pair.geometry
    M = pair.box_M
    if M <= 1:
        return 0.0
    diff = pair.left.indicator(i) != pair.right.indicator(i)
    N = g.scale
    n = np.arange(1, M)
    weights = np.exp(-n / N)
    if g.d == 1:
        H = np.full(n.shape, float(diff.sum()))
    else:
        t = np.arange(g.n_sites) // g.n_axial
        L = g.n_transverse
        radius = np.abs(np.where(t <= L // 2, t, t - L))
        per_radius = np.bincount(radius[diff], minlength=M + 1)
        H = np.cumsum(per_radius)[np.minimum(n, len(per_radius) - 1)].astype(float)
    return float(np.dot(weights, H)) / N ** (g.d + 1)


def discrepancy_total(pair: CoupledConfiguration) -> float:
    """sum_i h_i."""
    return sum(discrepancy_h(pair, i) for i in (1, 2, 3))
