import numpy as np
import pytest

from mflab import activations as act
from mflab import meanfield_core as mf


@pytest.fixture(scope="session")
def pwl():
    return act.piecewise_linear(0.5, 1.5, -2.5, 7.5)


@pytest.fixture(scope="session")
def ctx3(pwl):
    """Three-layer statics: both activations saturating-linear, delta 0.8."""
    return mf.StaticsContext(delta=0.8, activation1=pwl, activation2=pwl)


@pytest.fixture(scope="session")
def ctx2(pwl):
    """Two-layer radial statics: identity inner map."""
    return mf.StaticsContext(delta=0.8, activation1=act.identity(), activation2=pwl)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
