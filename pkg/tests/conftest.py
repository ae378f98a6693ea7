import numpy as np
import pytest

from cascade_embed.cascades import Cascade, SimConfig, simulate_batch
from cascade_embed.graph import SbmConfig, generate_sbm


@pytest.fixture(scope="session")
def small_graph():
    return generate_sbm(SbmConfig.equal_sizes(3, 10, 0.5, 0.02, seed=7))


@pytest.fixture(scope="session")
def small_cascades(small_graph):
    return simulate_batch(small_graph, SimConfig(1.0, 1.0, 1, 25, seed=7))


@pytest.fixture
def toy_cascades():
    """Five hand-written cascades over ten nodes."""
    return [
        Cascade(0, [0, 1, 2], [0.0, 0.3, 0.9]),
        Cascade(1, [3, 4], [0.0, 0.5]),
        Cascade(2, [5, 6, 7, 8], [0.0, 0.1, 0.2, 1.4]),
        Cascade(3, [9], [0.0]),
        Cascade(4, [1, 5, 9], [0.0, 0.7, 1.1]),
    ]


def rng(seed=0):
    return np.random.default_rng(seed)
