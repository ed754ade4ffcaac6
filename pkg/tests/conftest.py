import numpy as np
import pytest

from symbreak import (EmpiricalDataset, ExactScoreModel, VpSchedule,
                      center_and_normalize, gaussian_mixture, hypersphere,
                      two_point_1d)

# A deliberately lopsided 4-mode layout: distinct basin sizes make late
# starts visibly distort the mode proportions.
GMM_CENTERS = [[1.5, 0.3], [-0.6, 1.2], [-1.4, -0.7], [0.5, -1.3]]
GMM_STD = 0.08
GMM_N_PER_MODE = 64


@pytest.fixture(scope="session")
def schedule():
    return VpSchedule()


@pytest.fixture(scope="session")
def two_point_model(schedule):
    return ExactScoreModel(two_point_1d(), schedule)


@pytest.fixture(scope="session")
def embedded_2d_model(schedule):
    """The {-1,+1} pair living on the first axis of a 2D space."""
    ds = EmpiricalDataset(np.array([[-1.0, 0.0], [1.0, 0.0]]),
                          radius=1.0, centered=True)
    return ExactScoreModel(ds, schedule)


@pytest.fixture(scope="session")
def gmm_model(schedule):
    ds = gaussian_mixture(GMM_CENTERS, GMM_STD, GMM_N_PER_MODE, seed=7)
    return ExactScoreModel(ds, schedule)


@pytest.fixture(scope="session")
def sphere_model(schedule):
    ds = center_and_normalize(hypersphere(2, 1.0, 64, seed=3), r=1.0)
    return ExactScoreModel(ds, schedule)
