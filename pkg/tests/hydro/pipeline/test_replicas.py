import pytest

from cprsutils.hydro.pipeline.replicas import CHUNK, chunk_ranges, derive_seed, run_tasks


def test_derive_seed():
    a = derive_seed(7, 32)
    assert a == derive_seed(7, 32)
    assert a != derive_seed(7, 64)
    assert a != derive_seed(8, 32)
    assert 0 <= a < 2 ** 63


def test_chunk_ranges():
    assert chunk_ranges(600, 256) == [(0, 256), (256, 512), (512, 600)]
    assert chunk_ranges(3) == [(0, 3)]
    assert chunk_ranges(0) == []
    assert chunk_ranges(CHUNK + 1)[-1] == (CHUNK, CHUNK + 1)


@pytest.mark.parametrize("threads", [1, 2])
def test_run_tasks_keeps_order(threads):
    assert run_tasks(abs, [-3, 2, -1, 0, -7], threads) == [3, 2, 1, 0, 7]


def test_run_tasks_empty():
    assert run_tasks(abs, [], 4) == []
