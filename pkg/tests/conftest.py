import numpy as np
import pytest

from smalldev.environment import EnvironmentModel, QuenchedEnvironment, StepLaw


@pytest.fixture(scope="session")
def pm1_model():
    return EnvironmentModel.of((StepLaw.lattice(1.0, [(-1, 0.5), (1, 0.5)]), 1.0))


@pytest.fixture(scope="session")
def eps_model():
    plus = StepLaw.lattice(1.0, [(0, 0.5), (2, 0.5)])
    minus = StepLaw.lattice(1.0, [(-2, 0.5), (0, 0.5)])
    return EnvironmentModel.of((plus, 0.5), (minus, 0.5))


@pytest.fixture(scope="session")
def gauss_model():
    return EnvironmentModel.of((StepLaw.gaussian(0.0, 1.0), 1.0))


def degenerate(model, n):
    return QuenchedEnvironment(model=model, indices=np.zeros(n, dtype=np.int64))


@pytest.fixture(scope="session")
def make_degenerate():
    return degenerate
