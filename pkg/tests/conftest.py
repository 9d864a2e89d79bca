import numpy as np
import pytest

from hypertraffic.matrix import TrafficMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def small_matrix():
    # {(1,2):3, (1,3):1, (4,2):2}
    return TrafficMatrix.from_records([(1, 2), (1, 2), (1, 2), (1, 3), (4, 2), (4, 2)])
