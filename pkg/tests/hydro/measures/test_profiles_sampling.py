import numpy as np
import pytest

from cprsutils.hydro.errors import SimplexViolationError, SpecValidationError
from cprsutils.hydro.measures.profiles import check_simplex, make_profile
from cprsutils.hydro.measures.sampling import sample_product_measure
from cprsutils.lattice.core import Geometry, occupancy_counts


def test_linear_profile_hits_the_reservoirs(b_hat):
    prof = make_profile("linear", b_hat)
    rho = prof(np.array([-1.0, 0.0, 1.0]))
    assert np.allclose(rho[0], b_hat.left)
    assert np.allclose(rho[1], [0.2, 0.2, 0.2])
    assert np.allclose(rho[2], b_hat.right)


def test_sine_profile_vanishes_into_the_lift(b_hat):
    prof = make_profile("sine:0.1:0.0:-0.05:2", b_hat)
    rho = prof(np.array([-1.0, -0.5, 1.0]))
    assert np.allclose(rho[0], b_hat.left)
    assert np.allclose(rho[2], b_hat.right)
    # sin(2 pi (u + 1) / 2) = 1 at u = -0.5
    base = make_profile("linear", b_hat)(np.array([-0.5]))[0]
    assert np.allclose(rho[1], base + [0.1, 0.0, -0.05])


@pytest.mark.parametrize("name", ["constant:0.1:0.2", "sine:0.1", "spline", "linear:1"])
def test_unknown_profiles(b_hat, name):
    with pytest.raises(ValueError):
        make_profile(name, b_hat)


def test_check_simplex():
    check_simplex(np.array([[0.5, 0.25, 0.25], [0.0, 0.0, 0.0]]))
    with pytest.raises(SimplexViolationError):
        check_simplex(np.array([[0.5, 0.3, 0.3]]))
    with pytest.raises(SimplexViolationError):
        check_simplex(np.array([[-0.1, 0.3, 0.3]]))


def test_product_measure_frequencies(b_hat):
    g = Geometry(d=1, N=2000)
    config = sample_product_measure(make_profile("constant:0.1:0.2:0.3", b_hat), g, seed=9)
    freq = np.array(occupancy_counts(config)) / g.n_sites
    assert np.allclose(freq, [0.4, 0.1, 0.2, 0.3], atol=0.03)


def test_product_measure_is_seeded(b_hat):
    g = Geometry(d=2, N=4, transverse_len=8)
    prof = make_profile("linear", b_hat)
    a = sample_product_measure(prof, g, seed=1, replica_id=3)
    b = sample_product_measure(prof, g, seed=1, replica_id=3)
    c = sample_product_measure(prof, g, seed=1, replica_id=4)
    assert a.states == b.states
    assert a.states != c.states


def test_profile_outside_simplex_is_a_spec_error(b_hat):
    with pytest.raises(SpecValidationError):
        sample_product_measure(make_profile("constant:0.5:0.5:0.5", b_hat), Geometry(d=1, N=3), seed=0)
