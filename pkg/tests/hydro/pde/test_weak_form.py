import math

import numpy as np
import pytest

from cprsutils.hydro.config.model_params import BoundaryProfile, ModelParams
from cprsutils.hydro.errors import BoundaryVanishingError
from cprsutils.hydro.measures.profiles import make_profile
from cprsutils.hydro.measures.test_functions import parse_triple
from cprsutils.hydro.pde.ftcs import solve_pde
from cprsutils.hydro.pde.weak_form import WeakResidualMonitor, weak_residual


def _residual(params, b_hat, G, h, T=0.05):
    mon = WeakResidualMonitor(parse_triple(G), b_hat, params)
    solve_pde(make_profile("sine:0.1:0.05:0.05", b_hat), b_hat, params, T, h, monitors=[mon])
    return mon.residual


def test_zero_test_functions_give_zero(params, b_hat):
    assert _residual(params, b_hat, "zero/zero/zero", 1 / 8) == 0.0


def test_test_functions_must_vanish_at_reservoirs(params, b_hat):
    with pytest.raises(BoundaryVanishingError):
        _residual(params, b_hat, "one/zero/zero", 1 / 8)


@pytest.mark.parametrize("G", ["sine:1/sine:1/sine:1", "sine:2@1.5/bump:0:0.5/sine:1@0.5"])
def test_residual_shrinks_under_refinement(params, b_hat, G):
    series = [_residual(params, b_hat, G, h) for h in (1 / 8, 1 / 16, 1 / 32)]
    assert series[0] > series[1] > series[2]
    assert series[2] < 1e-2


def test_torus_mass_residual_vanishes():
    p = ModelParams(2.0, 1.0, 0.5, reaction_on=False, boundary_on=False)
    zero = BoundaryProfile.constant((0.0, 0.0, 0.0))

    def gamma(u):
        s = 0.3 + 0.1 * np.sin(math.pi * u[:, 0])
        return np.stack([s, s / 2, s / 3], axis=1)

    mon = WeakResidualMonitor(parse_triple("one/one/one"), zero, p)
    solve_pde(gamma, zero, p, 0.05, 1 / 16, mode="torus", monitors=[mon])
    assert mon.residual < 1e-12


def test_recorded_trajectory_gives_the_monitor_value(params, b_hat):
    G = parse_triple("sine:1/sine:2/sine:3")
    mon = WeakResidualMonitor(G, b_hat, params)
    traj = solve_pde(
        make_profile("sine:0.1:0.05:0.05", b_hat), b_hat, params, 0.03, 1 / 16,
        record_every=1, monitors=[mon],
    )
    assert weak_residual(traj, G, b_hat, params) == pytest.approx(mon.residual, rel=1e-12, abs=1e-15)


def test_monitor_needs_states():
    mon = WeakResidualMonitor(parse_triple("zero/zero/zero"), BoundaryProfile.constant((0.1, 0.1, 0.1)),
                              ModelParams(2.0, 1.0, 0.5))
    with pytest.raises(RuntimeError):
        mon.residual
