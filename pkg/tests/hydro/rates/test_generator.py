from collections import defaultdict

import numpy as np
import pytest
from scipy.linalg import expm

from cprsutils.hydro.config.model_params import ModelParams
from cprsutils.hydro.errors import StateSpaceTooLargeError
from cprsutils.hydro.rates.generator import (
    build_generator,
    point_mass,
    stationary_distribution,
    total_variation,
    transient_distribution,
)
from cprsutils.hydro.rates.kernel import boundary_rates, reaction_rates
from cprsutils.lattice.core import Configuration, Geometry, occupancy_counts


def _expected_row(config: Configuration, params: ModelParams) -> dict:
    """Off-diagonal rates out of `config`, assembled from the kernel one move at a time."""
    g = config.geometry
    row = defaultdict(float)

    def target(site, to):
        c = config.copy()
        c.states[site] = to
        return c.state_index()

    for x in range(g.n_sites):
        for to, r in reaction_rates(config, x, params).items():
            row[target(x, to)] += float(r)
    for x in g.boundary_sites:
        for to, r in boundary_rates(config, x, params).items():
            row[target(x, to)] += float(r)
    if params.exchange_on:
        for x, y, _ in g.bond_table:
            if config.states[x] != config.states[y]:
                c = config.copy()
                c.states[x], c.states[y] = c.states[y], c.states[x]
                row[c.state_index()] += float(params.n2)
    return dict(row)


def test_single_site_reaction_only_stationary_law(b_hat):
    g = Geometry(d=1, N=0)
    p = ModelParams(2.0, 1.0, 0.5, b_hat, exchange_on=False, boundary_on=False)
    pi = stationary_distribution(build_generator(g, p))
    # no neighbours, so xi dies out and omega flips on at r, off at 1
    assert np.allclose(pi, [2 / 3, 0.0, 1 / 3, 0.0], atol=1e-12)


def test_generator_rows_match_kernel(params):
    g = Geometry(d=1, N=1, axial_len=2)
    gen = build_generator(g, params)
    Q = gen.dense()
    assert np.allclose(gen.row_sums(), 0.0, atol=1e-12)
    for idx in range(gen.dimension):
        config = Configuration.from_state_index(g, idx)
        want = _expected_row(config, params)
        got = {j: Q[idx, j] for j in np.flatnonzero(Q[idx]) if j != idx}
        assert got.keys() == want.keys()
        for j, rate in want.items():
            assert got[j] == pytest.approx(rate, rel=1e-12)


def test_all_channels_off_is_zero_generator(b_hat):
    g = Geometry(d=1, N=1)
    p = ModelParams(2.0, 1.0, 0.5, b_hat, reaction_on=False, exchange_on=False, boundary_on=False)
    gen = build_generator(g, p)
    assert gen.matrix.nnz == 0
    init = point_mass(gen, Configuration.from_array(g, [1, 2, 3]))
    assert np.array_equal(transient_distribution(gen, init, 5.0), init)


def test_exchange_only_generator_conserves_counts(b_hat):
    g = Geometry(d=1, N=1, axial_len=2)
    p = ModelParams(2.0, 1.0, 0.5, b_hat, reaction_on=False, boundary_on=False)
    gen = build_generator(g, p)
    Q = gen.dense()
    counts = [occupancy_counts(Configuration.from_state_index(g, i)) for i in range(len(Q))]
    moves = [(i, j) for i, j in zip(*np.nonzero(Q)) if i != j]
    # one swap out of each of the 12 configurations with distinct states
    assert len(moves) == 12
    assert all(counts[i] == counts[j] for i, j in moves)
    law = transient_distribution(gen, point_mass(gen, Configuration.from_array(g, [1, 2])), 0.7)
    support = {tuple(int(v) for v in Configuration.from_state_index(g, int(i)).as_array()) for i in np.flatnonzero(law)}
    assert support == {(1, 2), (2, 1)}


def test_uniformization_matches_matrix_exponential(params, mixed_line3):
    gen = build_generator(mixed_line3.geometry, params)
    init = point_mass(gen, mixed_line3)
    t = 0.4
    want = init @ expm(t * gen.dense())
    got = transient_distribution(gen, init, t)
    assert total_variation(got, want) < 1e-9
    assert got.sum() == pytest.approx(1.0, abs=1e-9)


def test_transient_law_is_a_semigroup(params, mixed_line3):
    gen = build_generator(mixed_line3.geometry, params)
    init = point_mass(gen, mixed_line3)
    once = transient_distribution(gen, init, 0.5)
    twice = transient_distribution(gen, transient_distribution(gen, init, 0.2), 0.3)
    assert np.allclose(once, twice, atol=1e-10)


def test_long_horizon_reaches_stationarity(params):
    g = Geometry(d=1, N=1, axial_len=2)
    gen = build_generator(g, params)
    pi = stationary_distribution(gen)
    assert np.allclose(pi @ gen.dense(), 0.0, atol=1e-10)
    init = point_mass(gen, Configuration.from_array(g, [0, 0]))
    assert total_variation(transient_distribution(gen, init, 200.0), pi) < 1e-6


def test_restricted_generator_freezes_sites_outside_box(params):
    g = Geometry(d=2, N=1, transverse_len=3, axial_len=1)
    gen = build_generator(g, params, box_M=0)
    config = Configuration.from_array(g, [0, 1, 3])
    moves = np.flatnonzero(gen.dense()[config.state_index()])
    for j in moves:
        if j == config.state_index():
            continue
        other = Configuration.from_state_index(g, int(j))
        # only the in-box site (transverse coordinate 0) may change
        assert other.states[1:] == config.states[1:]


def test_oracle_cap(params):
    with pytest.raises(StateSpaceTooLargeError):
        build_generator(Geometry(d=1, N=4), params)
