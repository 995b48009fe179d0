from __future__ import annotations

import numpy as np

# Philox is counter-based: streams for different (seed, replica_id) are
# independent and do not depend on how replicas are scheduled.
BIT_GENERATOR = "Philox"

# sub-streams of one replica
STREAM_DYNAMICS = 0
STREAM_INITIAL = 1


def replica_rng(seed: int, replica_id: int = 0, stream: int = STREAM_DYNAMICS) -> np.random.Generator:
    if seed < 0 or replica_id < 0 or stream < 0:
        raise ValueError(f"seed, replica_id and stream must be >= 0, got ({seed}, {replica_id}, {stream})")
    ss = np.random.SeedSequence(seed, spawn_key=(replica_id, stream))
    return np.random.Generator(np.random.Philox(ss))


class UniformStream:
    """
    Uniforms on [0, 1) pulled from a Generator in fixed-size batches.

    The sequence only depends on the generator state, not on how many values
    are consumed per call, so batch size does not change results.
    """

    def __init__(self, rng: np.random.Generator, batch: int = 8192):
        if batch < 1:
            raise ValueError(f"batch must be >= 1, got {batch}")
        self._rng = rng
        self._batch = batch
        self._buf: list[float] = []
        self._pos = 0

    def next(self) -> float:
        if self._pos >= len(self._buf):
            self._buf = self._rng.random(self._batch).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u
