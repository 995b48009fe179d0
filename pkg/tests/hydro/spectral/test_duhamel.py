import math

import numpy as np
import pytest

from cprsutils.hydro.config.model_params import ModelParams
from cprsutils.hydro.errors import NonConvergenceError, SpecValidationError
from cprsutils.hydro.measures.profiles import lift, make_profile
from cprsutils.hydro.pde.ftcs import solve_pde
from cprsutils.hydro.spectral.duhamel import _g_weights, duhamel_solve


def test_g_weights_series_joins_closed_form():
    a = np.array([0.999e-3, 1.001e-3])
    g1, g2 = _g_weights(a)
    assert g1[0] == pytest.approx(g1[1], abs=5e-6)
    assert g2[0] == pytest.approx(g2[1], abs=5e-6)
    g1, g2 = _g_weights(np.array([0.0]))
    assert (g1[0], g2[0]) == (1.0, 0.5)


def test_pure_heat_is_exact(b_hat):
    p = ModelParams(2.0, 1.0, 0.5, b_hat, reaction_on=False)
    gamma = make_profile("sine:0.05:0.05:0.05", b_hat)
    sol = duhamel_solve(gamma, b_hat, p, 0.1, M_modes=16)
    u = np.linspace(-1.0, 1.0, 21)
    want = lift(b_hat)(u) + 0.05 * math.exp(-((math.pi / 2) ** 2) * 0.1) * np.sin(math.pi * (u + 1) / 2)[:, None]
    assert np.allclose(sol.evaluate(0.1, u), want, atol=1e-10)
    assert sol.refinements == 1


def test_agrees_with_finite_differences(params, b_hat):
    gamma = make_profile("sine:0.1:0.05:0.05", b_hat)
    T = 0.05
    sol = duhamel_solve(gamma, b_hat, params, T, M_modes=32)
    traj = solve_pde(gamma, b_hat, params, T, 1 / 64)
    dist = np.max(np.abs(sol.evaluate(T, traj.mesh.u1) - traj.final.node_values()))
    assert dist < 2e-3


def test_boundary_values_come_from_the_lift(params, b_hat):
    sol = duhamel_solve(make_profile("sine:0.1:0.05:0.05", b_hat), b_hat, params, 0.02, M_modes=16)
    ends = sol.evaluate(0.02, np.array([-1.0, 1.0]))
    assert np.allclose(ends[0], b_hat.left)
    assert np.allclose(ends[1], b_hat.right)


def test_time_lookup(params, b_hat):
    sol = duhamel_solve(make_profile("linear", b_hat), b_hat, params, 0.02, M_modes=8)
    assert np.array_equal(sol.coeffs_at(sol.times[3]), sol.coeffs[3])
    mid = 0.5 * (sol.times[1] + sol.times[2])
    assert np.allclose(sol.coeffs_at(mid), 0.5 * (sol.coeffs[1] + sol.coeffs[2]))
    with pytest.raises(ValueError):
        sol.coeffs_at(0.5)


@pytest.mark.parametrize(
    "kw,toggles",
    [
        ({"d": 2}, {}),
        ({}, {"boundary_on": False}),
        ({}, {"exchange_on": False}),
    ],
)
def test_unsupported_setups(b_hat, kw, toggles):
    p = ModelParams(2.0, 1.0, 0.5, b_hat, **toggles)
    with pytest.raises(SpecValidationError):
        duhamel_solve(make_profile("linear", b_hat), b_hat, p, 0.1, **kw)


def test_picard_cap(params, b_hat):
    with pytest.raises(NonConvergenceError):
        duhamel_solve(make_profile("sine:0.1:0.05:0.05", b_hat), b_hat, params, 0.05, M_modes=8, picard=1)
