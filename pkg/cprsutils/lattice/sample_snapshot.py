#!/usr/bin/env python3
import argparse
from pathlib import Path

from cprsutils.hydro.config.model_params import BoundaryProfile
from cprsutils.hydro.measures.profiles import make_profile
from cprsutils.hydro.measures.sampling import sample_product_measure
from cprsutils.paths import ensure_dirs, snapshot_path

from .core import Geometry
from .snapshot import write_snapshot


def _triple(text: str):
    parts = text.split("/")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected a/b/c, got {text!r}")
    return tuple(float(p) for p in parts)


def main():
    ensure_dirs()

    ap = argparse.ArgumentParser(description="Sample a product-measure configuration and save it as a snapshot.")
    ap.add_argument("output", nargs="?", default=None)  # <- optional
    ap.add_argument("--N", type=int, required=True)
    ap.add_argument("--d", type=int, default=1)
    ap.add_argument("--transverse-len", type=int, default=1)
    ap.add_argument("--mode", default="reservoirs", choices=["reservoirs", "torus"])
    ap.add_argument("--profile", default="linear")
    ap.add_argument("--b-left", type=_triple, default=(0.3, 0.2, 0.1))
    ap.add_argument("--b-right", type=_triple, default=None)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--replica", type=int, default=0)
    args = ap.parse_args()

    if args.output is None:
        args.output = str(snapshot_path(args.profile, args.N, args.seed, args.replica))

    geometry = Geometry(d=args.d, N=args.N, transverse_len=args.transverse_len, boundary_mode=args.mode)
    b_hat = BoundaryProfile(args.b_left, args.b_right if args.b_right is not None else args.b_left)
    config = sample_product_measure(make_profile(args.profile, b_hat), geometry, args.seed, replica_id=args.replica)
    write_snapshot(Path(args.output), config)
    print(f"Saved snapshot: {args.output}")
    print(f"Sites: {geometry.n_sites} ({geometry.n_axial}x{geometry.n_transverse})")


if __name__ == "__main__":
    main()
