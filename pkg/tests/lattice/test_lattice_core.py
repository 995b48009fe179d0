import numpy as np
import pytest

from cprsutils.lattice.core import (
    Configuration,
    Geometry,
    bonds,
    decode,
    encode,
    neighbors,
    occupancy_counts,
)


@pytest.mark.parametrize("xi,omega,state", [(0, 0, 0), (1, 0, 1), (0, 1, 2), (1, 1, 3)])
def test_encode_decode(xi, omega, state):
    assert encode(xi, omega) == state
    assert decode(state) == (xi, omega)


def test_encode_rejects_non_bits():
    with pytest.raises(ValueError):
        encode(2, 0)
    with pytest.raises(ValueError):
        decode(4)


def test_line_neighbors_and_bonds():
    g = Geometry(d=1, N=2)
    assert g.n_sites == 5
    assert neighbors(g, 0) == (1,)
    assert neighbors(g, 2) == (1, 3)
    assert bonds(g) == ((0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 4, 1))
    assert g.boundary_sites == (0, 4)
    assert g.boundary_side(0) == -1 and g.boundary_side(4) == 1


def test_torus_mode_wraps_and_has_no_boundary():
    g = Geometry(d=1, N=2, boundary_mode="torus")
    assert set(neighbors(g, 0)) == {1, 4}
    assert len(bonds(g)) == 5
    assert g.boundary_sites == ()


def test_strip_bond_count_and_boundary():
    g = Geometry(d=2, N=1, transverse_len=4)
    # 2 axial bonds per row, 4 transverse bonds per column
    assert len(bonds(g)) == 2 * 4 + 3 * 4
    assert len(g.boundary_sites) == 8
    assert all(len(neighbors(g, x)) in (3, 4) for x in range(g.n_sites))


def test_two_dimensions_need_three_transverse_sites():
    with pytest.raises(ValueError):
        Geometry(d=2, N=1, transverse_len=2)


def test_in_box_uses_transverse_distance():
    g = Geometry(d=2, N=1, transverse_len=7)
    inside = [x for x in range(g.n_sites) if g.in_box(x, 1)]
    # transverse indices 0, 1 and 6 (= -1)
    assert len(inside) == 3 * 3
    assert all(abs(g.transverse_coord(x)) <= 1 for x in inside)


def test_macro_coords_span_the_interval():
    g = Geometry(d=1, N=4)
    u = g.macro_coords[:, 0]
    assert u[0] == -1.0 and u[-1] == 1.0
    assert np.allclose(np.diff(u), 0.25)


def test_state_index_round_trip_and_order():
    g = Geometry(d=1, N=1)
    c = Configuration.from_array(g, [1, 2, 3])
    assert c.state_index() == 1 + 2 * 4 + 3 * 16
    assert Configuration.from_state_index(g, c.state_index()).states == c.states


def test_packed_form_is_four_sites_per_byte():
    g = Geometry(d=1, N=2)
    c = Configuration.from_array(g, [3, 0, 1, 2, 3])
    data = c.packed()
    assert len(data) == 2
    assert Configuration.from_packed(g, data).states == c.states


def test_configuration_rejects_bad_states(line3):
    with pytest.raises(ValueError):
        Configuration(line3, bytearray([0, 4, 0]))
    with pytest.raises(ValueError):
        Configuration(line3, bytearray([0, 0]))


def test_occupancy_counts_and_indicators(mixed_line3):
    assert occupancy_counts(mixed_line3) == (0, 1, 1, 1)
    assert mixed_line3.indicator(2).tolist() == [0, 1, 0]
    assert mixed_line3.xi().tolist() == [1, 0, 1]
    assert mixed_line3.omega().tolist() == [0, 1, 1]
