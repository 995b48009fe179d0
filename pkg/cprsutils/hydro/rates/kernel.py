# cprsutils/hydro/rates/kernel.py
"""
Microscopic transition rates.

All functions here are pure and keep the numeric type of ModelParams
(floats in simulation, Fractions in exact checks). Zero rates are left out
of the returned maps.
"""
from __future__ import annotations

from numbers import Real
from typing import Dict, Sequence

from cprsutils.hydro.config.model_params import ModelParams
from cprsutils.hydro.errors import NotBoundarySiteError
from cprsutils.lattice.core import BOTH, WILD, Configuration, Geometry, neighbors

RateMap = Dict[int, Real]


def _in_box_neighbors(geometry: Geometry, site: int, box_M: int | None, inside: bool) -> Sequence[int]:
    nbrs = neighbors(geometry, site)
    if box_M is None:
        return nbrs if inside else ()
    return tuple(y for y in nbrs if geometry.in_box(y, box_M) == inside)


def beta(config: Configuration, site: int, params: ModelParams, box_M: int | None = None) -> Real:
    """
    Birth rate at `site`: lambda1 * #(neighbours in state 1) + lambda2 * #(neighbours in state 3).
    With box_M set only neighbours inside the box count (the restricted rate).
    """
    n1 = n3 = 0
    for y in _in_box_neighbors(config.geometry, site, box_M, inside=True):
        s = config.states[y]
        if s == WILD:
            n1 += 1
        elif s == BOTH:
            n3 += 1
    return params.lambda1 * n1 + params.lambda2 * n3


def beta_out(config: Configuration, site: int, params: ModelParams, box_M: int) -> Real:
    """The part of beta contributed by neighbours outside the box."""
    n1 = n3 = 0
    for y in _in_box_neighbors(config.geometry, site, box_M, inside=False):
        s = config.states[y]
        if s == WILD:
            n1 += 1
        elif s == BOTH:
            n3 += 1
    return params.lambda1 * n1 + params.lambda2 * n3


def flip_rates(state: int, b: Real, params: ModelParams) -> RateMap:
    """
    The two flip channels at a site in `state` with birth rate `b`:
    omega flips (0<->2, 1<->3) at r if omega=0 else 1, xi flips (0<->1,
    2<->3) at b if xi=0 else 1.
    """
    out: RateMap = {}
    w = params.r if not (state & 2) else 1
    if w:
        out[state ^ 2] = w
    x = b if not (state & 1) else 1
    if x:
        out[state ^ 1] = x
    return out


def reaction_rates(
    config: Configuration, site: int, params: ModelParams, box_M: int | None = None
) -> RateMap:
    """
    Reaction moves at `site` as {target state: rate}.

    With box_M set this is the restricted process: sites outside the box are
    frozen and births only see in-box neighbours.
    """
    if not params.reaction_on:
        return {}
    if box_M is not None and not config.geometry.in_box(site, box_M):
        return {}
    return flip_rates(config.states[site], beta(config, site, params, box_M), params)


def boundary_rates(
    config: Configuration, site: int, params: ModelParams, box_M: int | None = None
) -> RateMap:
    """
    Reservoir moves at a boundary site: to each j != current state at N^2 b_j.
    """
    g = config.geometry
    if not g.is_boundary(site):
        raise NotBoundarySiteError(f"site {site} is not on the reservoir edge")
    if not params.boundary_on:
        return {}
    if box_M is not None and not g.in_box(site, box_M):
        return {}
    current = config.states[site]
    b = params.b_hat.full(g.boundary_side(site))
    n2 = params.n2
    return {j: n2 * b[j] for j in range(4) if j != current and b[j]}


def exchange_rate(params: ModelParams) -> Real:
    """Per-bond stirring rate, N^2 when exchange is on."""
    return params.n2 if params.exchange_on else 0


def exchange_allowed(geometry: Geometry, bond: tuple[int, int, int], box_M: int | None = None) -> bool:
    if box_M is None:
        return True
    x, y, _ = bond
    return geometry.in_box(x, box_M) and geometry.in_box(y, box_M)


def total_out_rate(config: Configuration, params: ModelParams) -> Real:
    """Exact total jump rate of the configuration (no-op swaps excluded)."""
    g = config.geometry
    total: Real = 0
    for x in range(g.n_sites):
        total += sum(reaction_rates(config, x, params).values())
    for x in g.boundary_sites:
        total += sum(boundary_rates(config, x, params).values())
    if params.exchange_on:
        for x, y, _ in g.bond_table:
            if config.states[x] != config.states[y]:
                total += params.n2
    return total
