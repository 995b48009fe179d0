import numpy as np
import pytest
from scipy.stats import kstest

from cprsutils.hydro.config.model_params import BoundaryProfile, ModelParams
from cprsutils.hydro.engine.event_log import read_event_log
from cprsutils.hydro.engine.events import CountsChecker, EventRecord, check_event
from cprsutils.hydro.engine.kmc import KmcEngine, channel_bounds, simulate
from cprsutils.hydro.engine.rng import UniformStream, replica_rng
from cprsutils.hydro.errors import InconsistentEventError
from cprsutils.hydro.rates.generator import build_generator, point_mass, total_variation, transient_distribution
from cprsutils.lattice.core import Configuration, Geometry


class _Recorder:
    def __init__(self):
        self.events = []

    def on_start(self, t, config):
        self.start = config.copy()

    def on_event(self, event, before):
        self.events.append(event)

    def on_finish(self, t, config):
        self.final = config.copy()


@pytest.fixture
def strip():
    return Configuration.from_array(Geometry(d=2, N=2, transverse_len=3), [1, 2, 3, 0, 1] * 3)


def test_same_seed_same_path(params, strip):
    p = params.with_scale(2)
    a = simulate(strip, p, 0.2, seed=7)
    b = simulate(strip, p, 0.2, seed=7)
    assert a.states == b.states
    assert strip.states == bytearray([1, 2, 3, 0, 1] * 3)  # input untouched


def test_split_run_matches_single_run(params, strip):
    p = params.with_scale(2)
    one, split = _Recorder(), _Recorder()
    simulate(strip, p, 0.3, seed=3, observers=[one])

    engine = KmcEngine(strip, p, seed=3, observers=[split])
    for t in (0.05, 0.1, 0.25, 0.3):
        engine.advance_to(t)
    engine.finish()

    assert one.events == split.events
    assert one.final.states == split.final.states


def test_batch_size_does_not_change_the_path(params, strip):
    p = params.with_scale(2)
    a = KmcEngine(strip, p, seed=5, batch=1)
    b = KmcEngine(strip, p, seed=5, batch=4096)
    assert a.advance_to(0.2).states == b.advance_to(0.2).states


def test_uniform_stream_is_batch_independent():
    a = UniformStream(replica_rng(1, 2), batch=3)
    b = UniformStream(replica_rng(1, 2), batch=1000)
    assert [a.next() for _ in range(10)] == [b.next() for _ in range(10)]


def test_replicas_use_different_streams():
    assert replica_rng(0, 0).random() != replica_rng(0, 1).random()


def test_counts_checker_and_event_times(params, strip):
    p = params.with_scale(2)
    checker, rec = CountsChecker(every=1), _Recorder()
    simulate(strip, p, 0.2, seed=11, observers=[checker, rec])
    times = [e.time for e in rec.events]
    assert times == sorted(times)
    assert all(0 < t <= 0.2 for t in times)
    assert checker.seen == len(rec.events) > 0


def test_torus_mode_has_no_reservoir_events(params):
    g = Geometry(d=1, N=3, boundary_mode="torus")
    p = ModelParams(params.lambda1, params.lambda2, params.r, params.b_hat, scale_N=3, boundary_on=False)
    rec = _Recorder()
    simulate(Configuration.from_array(g, [1, 0, 2, 3, 0, 0, 1]), p, 0.5, seed=2, observers=[rec])
    kinds = {e.kind for e in rec.events}
    assert "boundary" not in kinds
    assert "exchange" in kinds


def test_channel_bounds(params, strip):
    p = params.with_scale(2)
    ex, re, bd = channel_bounds(strip, p)
    g = strip.geometry
    assert ex == 4 * len(g.bond_table)
    # R = max(r, 1) + max(2 d max(lambda), 1) = 1 + 8
    assert re == 9 * g.n_sites
    assert bd == 4 * len(g.boundary_sites)


def test_event_log_lines_match_events(tmp_path, params, strip):
    p = params.with_scale(2)
    rec = _Recorder()
    path = tmp_path / "events.ndjson"
    simulate(strip, p, 0.1, seed=4, observers=[rec], event_log=str(path))
    lines = list(read_event_log(path))
    assert len(lines) == len(rec.events)
    assert lines[0]["kind"] == rec.events[0].kind
    assert {"t", "kind", "site", "from", "to"} <= lines[0].keys()


def test_check_event_rejects_stale_records(mixed_line3):
    with pytest.raises(InconsistentEventError):
        check_event(EventRecord("reaction", 0.1, 0, 2, 3), mixed_line3)
    with pytest.raises(InconsistentEventError):
        check_event(EventRecord("boundary", 0.1, 1, 2, 0), mixed_line3)
    check_event(EventRecord("exchange", 0.1, 0, 1, 2, 1, 0), mixed_line3)


def test_simulated_law_matches_exact_transient_law(params):
    g = Geometry(d=1, N=1, axial_len=2)
    init = Configuration.from_array(g, [1, 2])
    T, replicas = 0.3, 4000
    counts = np.zeros(4 ** g.n_sites)
    for rid in range(replicas):
        engine = KmcEngine(init, params, seed=123, replica_id=rid, batch=64)
        engine.advance_to(T)
        counts[engine.finish().state_index()] += 1
    gen = build_generator(g, params)
    exact = transient_distribution(gen, point_mass(gen, init), T)
    assert total_variation(counts / replicas, exact) < 0.06


@pytest.mark.parametrize("case", ["exchange_only", "thinned_flips"])
def test_holding_times_are_exponential(b_hat, case):
    if case == "exchange_only":
        # one bond whose endpoints always differ: every tentative event swaps
        g = Geometry(d=1, N=1, axial_len=2)
        init = Configuration.from_array(g, [1, 2])
        p = ModelParams(2.0, 1.0, 0.5, b_hat, scale_N=3, reaction_on=False, boundary_on=False)
        rate = 9.0
    else:
        # a lone site flipping omega at rate r = 1 both ways, under an envelope of 5
        g = Geometry(d=1, N=0)
        init = Configuration.from_array(g, [0])
        p = ModelParams(2.0, 1.0, 1.0, b_hat, exchange_on=False, boundary_on=False)
        rate = 1.0
    rec = _Recorder()
    simulate(init, p, 3000.0 / rate, seed=17, observers=[rec])
    times = np.array([0.0] + [e.time for e in rec.events])
    gaps = np.diff(times)
    assert len(gaps) > 2000
    assert kstest(gaps, "expon", args=(0, 1.0 / rate)).pvalue > 0.01


def test_empty_lattice_is_absorbing(line3):
    p = ModelParams(2.0, 3.0, 0.0, BoundaryProfile.constant((0.0, 0.0, 0.0)), scale_N=1)
    init = Configuration.from_array(line3, [0, 0, 0])
    rec = _Recorder()
    final = simulate(init, p, 5.0, seed=8, observers=[rec])
    assert final.states == bytearray(3)
    assert rec.events == []
    gen = build_generator(line3, p)
    assert not gen.dense()[init.state_index()].any()
