import numpy as np
import pytest

from cprsutils.hydro.config.model_params import ModelParams
from cprsutils.hydro.errors import SimplexViolationError
from cprsutils.hydro.pde.reaction import reaction_F, reaction_jacobian


def test_empty_state_only_gets_slowdowns(params):
    assert np.allclose(reaction_F([0.0, 0.0, 0.0], params, 1), [0.0, 0.5, 0.0])


def test_reaction_by_hand(params):
    # beta = 2 (2 * 0.2 + 1 * 0.1) = 1, rho0 = 0.6
    F = reaction_F([0.2, 0.1, 0.1], params, 1)
    assert np.allclose(F, [0.4, 0.2, 0.0])


def test_reaction_vectorizes_over_leading_axes(params):
    rho = np.array([[[0.2, 0.1, 0.1], [0.0, 0.0, 0.0]]] * 3)
    F = reaction_F(rho, params, 2)
    assert F.shape == (3, 2, 3)
    assert np.allclose(F[1, 0], reaction_F([0.2, 0.1, 0.1], params, 2))


def test_total_density_balance(params):
    # sum_i F_i = (beta + r) rho0 - rho1 - rho2
    rho = np.array([0.25, 0.15, 0.3])
    F = reaction_F(rho, params, 1)
    beta = 2 * (2.0 * 0.25 + 1.0 * 0.3)
    assert F.sum() == pytest.approx((beta + 0.5) * 0.3 - 0.25 - 0.15)


def test_jacobian_matches_finite_differences(params):
    rho = np.array([0.2, 0.15, 0.25])
    J = reaction_jacobian(rho, params, 2)
    e = 1e-6
    for j in range(3):
        step = np.zeros(3)
        step[j] = e
        fd = (reaction_F(rho + step, params, 2) - reaction_F(rho - step, params, 2)) / (2 * e)
        assert np.allclose(J[:, j], fd, atol=1e-7)


def test_outside_simplex_is_rejected(params):
    with pytest.raises(SimplexViolationError):
        reaction_F([0.6, 0.3, 0.3], params, 1)
    # the check can be skipped
    reaction_F([0.6, 0.3, 0.3], params, 1, slack=None)


def test_fixed_point_without_infection():
    p = ModelParams(2.0, 1.0, 0.5)
    rho = np.array([0.0, 0.5 / 1.5, 0.0])
    assert np.allclose(reaction_F(rho, p, 1), 0.0)
