# cprsutils/hydro/pipeline/replicas.py
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Sequence, TypeVar

import numpy as np

from cprsutils.hydro.logging_utils import get_logger, kv

log = get_logger(__name__)

T = TypeVar("T")

# replicas per task in chunked runs; fixed so results do not depend on the pool size
CHUNK = 256


def derive_seed(seed: int, *tags: int) -> int:
    """A 63-bit seed for one (seed, tags) cell, e.g. one N of a grid."""
    ss = np.random.SeedSequence([seed, *tags])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def run_tasks(fn: Callable[[Any], T], tasks: Sequence[Any], threads: int = 1) -> List[T]:
    """
    fn(task) for every task, results in task order. threads > 1 uses a
    process pool; fn and tasks must then be picklable (module-level).
    """
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    workers = min(threads, len(tasks))
    log.info(kv("replica_pool", workers=workers, tasks=len(tasks)))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def chunk_ranges(n: int, size: int = CHUNK) -> List[tuple[int, int]]:
    """[start, stop) replica-id ranges covering 0..n-1."""
    return [(a, min(n, a + size)) for a in range(0, n, size)]
