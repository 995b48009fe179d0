from __future__ import annotations

from pathlib import Path
from typing import Union

from cprsutils.hydro.io.atomic_write import atomic_write_text
from .core import Configuration, Geometry

PathLike = Union[str, Path]

MAGIC = "cprs-snapshot"


def format_snapshot(config: Configuration) -> str:
    """
    ASCII snapshot: one header line, then one row of base-4 digits per
    transverse index (e1 runs along the row).
    """
    g = config.geometry
    header = (
        f"{MAGIC} d={g.d} N={g.N} transverse_len={g.transverse_len} "
        f"boundary_mode={g.boundary_mode} axial_len={g.n_axial}"
    )
    rows = []
    for t in range(g.n_transverse):
        start = t * g.n_axial
        rows.append("".join(str(s) for s in config.states[start:start + g.n_axial]))
    return "\n".join([header, *rows]) + "\n"


def parse_snapshot(text: str) -> Configuration:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith(MAGIC):
        raise ValueError("not a snapshot: missing header")

    fields = dict(tok.split("=", 1) for tok in lines[0].split()[1:])
    try:
        geometry = Geometry(
            d=int(fields["d"]),
            N=int(fields["N"]),
            transverse_len=int(fields.get("transverse_len", 1)),
            boundary_mode=fields.get("boundary_mode", "reservoirs"),  # type: ignore[arg-type]
            axial_len=int(fields["axial_len"]) if "axial_len" in fields else None,
        )
    except KeyError as e:
        raise ValueError(f"snapshot header missing field: {e.args[0]}") from None

    if geometry.axial_len == 2 * geometry.N + 1:
        geometry = Geometry(geometry.d, geometry.N, geometry.transverse_len, geometry.boundary_mode)

    rows = lines[1:]
    if len(rows) != geometry.n_transverse or any(len(r) != geometry.n_axial for r in rows):
        raise ValueError(
            f"snapshot body must be {geometry.n_transverse} rows of {geometry.n_axial} digits"
        )
    digits = "".join(rows)
    if set(digits) - set("0123"):
        raise ValueError("snapshot body must contain base-4 digits only")
    return Configuration(geometry, bytearray(int(c) for c in digits))


def write_snapshot(path: PathLike, config: Configuration) -> Path:
    dst = Path(path)
    atomic_write_text(dst, format_snapshot(config))
    return dst


def read_snapshot(path: PathLike) -> Configuration:
    return parse_snapshot(Path(path).read_text(encoding="utf-8"))
