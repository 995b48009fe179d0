# cprsutils/hydro/coupling/rates.py
"""
Joint rate tables of the coupled (restricted, full) pair.

The reaction tables are built channel by channel. A site has an omega flip
and a xi flip; when both copies sit on the same side of a channel the
channel moves them together (matched, "1a"), with births sharing the
smaller of the two in-box birth rates; what is left over moves one copy
alone ("1b"). Births at in-box sites caused by out-of-box neighbours move
the full copy alone ("2a"), and every reaction outside the box moves only
the full copy ("2b").

Exchanges along in-box bonds move both copies ("3"), other bonds only the
full copy ("4"). Reservoir flips at in-box boundary sites send both copies
to the same state ("b1"), outside the box only the full copy ("b2").

Summing a table by the move of one coordinate gives back that coordinate's
own rate table; `check_marginal_fidelity` verifies this exactly.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from numbers import Real
from typing import Dict, List, Literal, Tuple

from cprsutils.hydro.config.model_params import ModelParams
from cprsutils.hydro.engine.events import EventKind
from cprsutils.hydro.errors import AssertionFailure, NotBoundarySiteError
from cprsutils.hydro.rates.kernel import (
    beta,
    beta_out,
    boundary_rates,
    exchange_allowed,
    exchange_rate,
    reaction_rates,
)
from cprsutils.lattice.core import Configuration

from .pair import CoupledConfiguration

Label = Literal["1a", "1b", "2a", "2b", "3", "4", "b1", "b2"]


@dataclass(frozen=True, slots=True)
class CoupledMove:
    """
    left/right: the new state at `site` in that copy, None when the copy
    does not move. For exchanges it is the state the swap brings into
    `site` (the partner is `other`).
    """
    kind: EventKind
    site: int
    left: int | None
    right: int | None
    label: Label
    other: int = -1
    bond: int = -1


RateTable = List[Tuple[CoupledMove, Real]]


def _add(table: RateTable, move: CoupledMove, rate: Real) -> None:
    if rate:
        table.append((move, rate))


def coupled_exchange_rates(pair: CoupledConfiguration, bond: int, params: ModelParams) -> RateTable:
    g = pair.geometry
    x, y, _ = g.bond_table[bond]
    rate = exchange_rate(params)
    if not rate:
        return []
    L, R = pair.left.states, pair.right.states
    right_to = R[y] if R[x] != R[y] else None
    if exchange_allowed(g, (x, y, 0), pair.box_M):
        left_to = L[y] if L[x] != L[y] else None
        if left_to is None and right_to is None:
            return []
        return [(CoupledMove("exchange", x, left_to, right_to, "3", y, bond), rate)]
    if right_to is None:
        return []
    return [(CoupledMove("exchange", x, None, right_to, "4", y, bond), rate)]


def coupled_reaction_rates(pair: CoupledConfiguration, site: int, params: ModelParams) -> RateTable:
    table: RateTable = []
    if not params.reaction_on:
        return table
    g = pair.geometry
    M = pair.box_M
    sl, sr = pair.left.states[site], pair.right.states[site]

    if not g.in_box(site, M):
        for target, rate in reaction_rates(pair.right, site, params).items():
            _add(table, CoupledMove("reaction", site, None, target, "2b"), rate)
        return table

    # omega channel: autonomous, rate r to switch on and 1 to switch off
    a_l = params.r if not (sl & 2) else 1
    a_r = params.r if not (sr & 2) else 1
    if (sl & 2) == (sr & 2):
        _add(table, CoupledMove("reaction", site, sl ^ 2, sr ^ 2, "1a"), a_l)
    else:
        _add(table, CoupledMove("reaction", site, sl ^ 2, None, "1b"), a_l)
        _add(table, CoupledMove("reaction", site, None, sr ^ 2, "1b"), a_r)

    # xi channel
    b_l = beta(pair.left, site, params, M)
    b_r_in = beta(pair.right, site, params, M)
    b_r_out = beta_out(pair.right, site, params, M)
    xl, xr = sl & 1, sr & 1
    if xl == 0 and xr == 0:
        b_min = min(b_l, b_r_in)
        _add(table, CoupledMove("reaction", site, sl ^ 1, sr ^ 1, "1a"), b_min)
        _add(table, CoupledMove("reaction", site, sl ^ 1, None, "1b"), b_l - b_min)
        _add(table, CoupledMove("reaction", site, None, sr ^ 1, "1b"), b_r_in - b_min)
        _add(table, CoupledMove("reaction", site, None, sr ^ 1, "2a"), b_r_out)
    elif xl == 1 and xr == 1:
        _add(table, CoupledMove("reaction", site, sl ^ 1, sr ^ 1, "1a"), 1)
    else:
        _add(table, CoupledMove("reaction", site, sl ^ 1, None, "1b"), b_l if xl == 0 else 1)
        if xr == 0:
            _add(table, CoupledMove("reaction", site, None, sr ^ 1, "1b"), b_r_in)
            _add(table, CoupledMove("reaction", site, None, sr ^ 1, "2a"), b_r_out)
        else:
            _add(table, CoupledMove("reaction", site, None, sr ^ 1, "1b"), 1)
    return table


def coupled_boundary_rates(pair: CoupledConfiguration, site: int, params: ModelParams) -> RateTable:
    g = pair.geometry
    if not g.is_boundary(site):
        raise NotBoundarySiteError(f"site {site} is not on the reservoir edge")
    table: RateTable = []
    if not params.boundary_on:
        return table
    sl, sr = pair.left.states[site], pair.right.states[site]
    b = params.b_hat.full(g.boundary_side(site))
    n2 = params.n2
    if g.in_box(site, pair.box_M):
        for j in range(4):
            left_to = j if j != sl else None
            right_to = j if j != sr else None
            if left_to is None and right_to is None:
                continue
            _add(table, CoupledMove("boundary", site, left_to, right_to, "b1"), n2 * b[j])
        return table
    for j in range(4):
        if j != sr:
            _add(table, CoupledMove("boundary", site, None, j, "b2"), n2 * b[j])
    return table


# ------------------------
# marginal fidelity


MoveKey = Tuple[str, int, int]  # (kind, site or bond, new state at site)


def project_moves(table: RateTable, side: Literal["left", "right"]) -> Dict[MoveKey, Real]:
    """Sum rates by the move one coordinate makes; moves that leave it alone are dropped."""
    out: Dict[MoveKey, Real] = defaultdict(int)
    for move, rate in table:
        to = move.left if side == "left" else move.right
        if to is None:
            continue
        key = (move.kind, move.bond if move.kind == "exchange" else move.site, to)
        out[key] += rate
    return dict(out)


def single_copy_moves(config: Configuration, params: ModelParams, box_M: int | None = None) -> Dict[MoveKey, Real]:
    """Every move of one copy keyed like project_moves; box_M gives the restricted process."""
    g = config.geometry
    out: Dict[MoveKey, Real] = {}
    rate = exchange_rate(params)
    if rate:
        for b, bond in enumerate(g.bond_table):
            x, y, _ = bond
            if config.states[x] != config.states[y] and exchange_allowed(g, bond, box_M):
                out[("exchange", b, config.states[y])] = rate
    for x in range(g.n_sites):
        for to, r in reaction_rates(config, x, params, box_M).items():
            out[("reaction", x, to)] = r
    for x in g.boundary_sites:
        for to, r in boundary_rates(config, x, params, box_M).items():
            out[("boundary", x, to)] = r
    return out


def coupled_table(pair: CoupledConfiguration, params: ModelParams) -> RateTable:
    """The full joint table of the pair: every bond, site and boundary site."""
    g = pair.geometry
    table: RateTable = []
    for b in range(len(g.bond_table)):
        table.extend(coupled_exchange_rates(pair, b, params))
    for x in range(g.n_sites):
        table.extend(coupled_reaction_rates(pair, x, params))
    for x in g.boundary_sites:
        table.extend(coupled_boundary_rates(pair, x, params))
    return table


def check_marginal_fidelity(pair: CoupledConfiguration, params: ModelParams) -> None:
    """
    Raise AssertionFailure unless the left projection equals the restricted
    process's rates and the right projection equals the full process's.
    Exact when params carry Fractions.
    """
    table = coupled_table(pair, params)
    for side, config, box in (("left", pair.left, pair.box_M), ("right", pair.right, None)):
        got = {k: v for k, v in project_moves(table, side).items() if v}
        want = single_copy_moves(config, params, box)
        if got != want:
            diff = sorted(set(got.items()) ^ set(want.items()))
            raise AssertionFailure(f"{side} marginal differs from the single-copy rates: {diff[:6]}")
