import numpy as np
import pytest

from ringheom import BathSpec, PhaseSpaceGrid, RingSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20250810)


@pytest.fixture
def small_grid():
    return PhaseSpaceGrid(Np=4, M=8)


@pytest.fixture
def ring():
    return RingSpec()


@pytest.fixture
def bath():
    return BathSpec(eta_x=0.2, eta_y=0.1, gamma_x=1.0, gamma_y=1.0, k_x=2, k_y=2, beta=1.0)
