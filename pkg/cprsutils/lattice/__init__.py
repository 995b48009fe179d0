from .core import Configuration, Geometry, bonds, decode, encode, neighbors, occupancy_counts

__all__ = ["Configuration", "Geometry", "bonds", "decode", "encode", "neighbors", "occupancy_counts"]
