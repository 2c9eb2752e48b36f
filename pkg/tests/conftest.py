import numpy as np
import pytest

from rdcn_throughput import NetworkParams


def sinkhorn_doubly_stochastic(n, seed, target=1.0, zero_diagonal=False):
    """Independent Sinkhorn projection used to produce test inputs."""
    rng = np.random.default_rng(seed)
    m = rng.random((n, n)) + 0.05
    if zero_diagonal:
        np.fill_diagonal(m, 0.0)
    for _ in range(4000):
        m *= target / m.sum(axis=1, keepdims=True)
        m *= target / m.sum(axis=0, keepdims=True)
        if max(np.abs(m.sum(axis=1) - target).max(),
               np.abs(m.sum(axis=0) - target).max()) < 1e-14 * max(target, 1.0):
            break
    return m


@pytest.fixture
def desk_params():
    return NetworkParams(16, 4, 25e9)
