#!/usr/bin/env python3
import argparse

from .core import occupancy_counts
from .snapshot import read_snapshot


def main():
    ap = argparse.ArgumentParser(description="Print the per-state site counts of a snapshot.")
    ap.add_argument("input")
    args = ap.parse_args()

    config = read_snapshot(args.input)
    counts = occupancy_counts(config)
    n = config.geometry.n_sites
    for state, c in enumerate(counts):
        print(f"{state}\t{c}\t{c / n:.6f}")


if __name__ == "__main__":
    main()
