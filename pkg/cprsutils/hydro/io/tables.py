# cprsutils/hydro/io/tables.py
from __future__ import annotations

from typing import Iterable, Iterator, Sequence

from cprsutils.hydro.measures.ledger import LEDGER_CSV_HEADER, CurrentLedger, ledger_rows
from cprsutils.hydro.pde.ftcs import PdeState

from .atomic_write import PathLike, atomic_write_csv

DECAY_CSV_HEADER = ("N", "M", "t", "mean_h", "stderr")


def pde_header(d: int) -> tuple[str, ...]:
    return ("t", "u1", "rho1", "rho2", "rho3") if d == 1 else ("t", "u1", "u2", "rho1", "rho2", "rho3")


def pde_rows(states: Iterable[PdeState]) -> Iterator[tuple]:
    """One row per node per state, nodes in mesh order."""
    for s in states:
        pts = s.mesh.points
        vals = s.node_values()
        for p, v in zip(pts, vals):
            yield (float(s.t), *(float(c) for c in p), float(v[0]), float(v[1]), float(v[2]))


def write_pde_csv(path: PathLike, states: Sequence[PdeState], comments: Sequence[str] = ()) -> None:
    if not states:
        raise ValueError("no states to write")
    atomic_write_csv(path, pde_header(states[0].mesh.d), pde_rows(states), comments)


def write_ledger_csv(
    path: PathLike, ledger: CurrentLedger, t: float | None = None, comments: Sequence[str] = ()
) -> None:
    atomic_write_csv(path, LEDGER_CSV_HEADER, ledger_rows(ledger, t), comments)


def write_decay_csv(path: PathLike, rows: Iterable[Sequence], comments: Sequence[str] = ()) -> None:
    atomic_write_csv(path, DECAY_CSV_HEADER, rows, comments)
