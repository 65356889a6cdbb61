import numpy as np
import pytest

from lattice_gravimeter.lattice.params import rb87_params, scaled_params


@pytest.fixture
def rb87():
    return rb87_params()


@pytest.fixture
def scaled():
    return scaled_params()


@pytest.fixture
def rng():
    return np.random.default_rng(42)
