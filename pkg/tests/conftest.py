from fractions import Fraction

import pytest

from cprsutils.hydro.config.model_params import BoundaryProfile, ModelParams
from cprsutils.lattice.core import Configuration, Geometry


@pytest.fixture
def b_hat():
    return BoundaryProfile((0.3, 0.2, 0.1), (0.1, 0.2, 0.3))


@pytest.fixture
def params(b_hat):
    """lambda1=2, lambda2=1, r=0.5 with distinct reservoirs on the two sides."""
    return ModelParams(lambda1=2.0, lambda2=1.0, r=0.5, b_hat=b_hat, scale_N=1)


@pytest.fixture
def exact_params():
    """Same rates as `params`, in Fractions, for exact rate bookkeeping."""
    b = BoundaryProfile(
        (Fraction(3, 10), Fraction(1, 5), Fraction(1, 10)),
        (Fraction(1, 10), Fraction(1, 5), Fraction(3, 10)),
    )
    return ModelParams(lambda1=Fraction(2), lambda2=Fraction(1), r=Fraction(1, 2), b_hat=b, scale_N=1)


@pytest.fixture
def line3():
    """Three sites on a line, both ends touching a reservoir."""
    return Geometry(d=1, N=1)


@pytest.fixture
def mixed_line3(line3):
    """One site of each occupied type: states 1, 2, 3."""
    return Configuration.from_array(line3, [1, 2, 3])
