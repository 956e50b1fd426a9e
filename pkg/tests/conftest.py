import numpy as np
import pytest

from csnfilter import kernels
from csnfilter.network import CoupledNetwork, network_from_raw
from csnfilter.synthgen import SynthConfig, generate


def random_network(rng, m=12, n=15, p_social=0.25, p_item=0.3, min_out=1):
    """Small random coupled network with every user following someone."""
    T = rng.random((m, m)) < p_social
    np.fill_diagonal(T, False)
    for i in range(m):
        if T[i].sum() < min_out:
            j = rng.choice([x for x in range(m) if x != i])
            T[i, j] = True
    R = rng.random((m, n)) < p_item
    social = np.argwhere(T)
    behavior = np.argwhere(R)
    return CoupledNetwork.from_edges(social, behavior, m, n)


def strongly_connected_network(rng, m=20, extra=0.15):
    """Directed cycle plus random chords: strongly connected by construction."""
    perm = rng.permutation(m)
    T = np.zeros((m, m), dtype=bool)
    T[perm, np.roll(perm, -1)] = True
    T |= rng.random((m, m)) < extra
    np.fill_diagonal(T, False)
    R = rng.random((m, 10)) < 0.3
    return CoupledNetwork.from_edges(np.argwhere(T), np.argwhere(R), m, 10)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synth_net():
    return generate(SynthConfig(n_users=120, n_items=300, mean_out_degree=6, mean_items=10,
                                rho=0.8, seed=7))


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    return request.param


def toy_network():
    """Five users, five items; users 3 and 4 are linked but share no item."""
    social = [(0, 1), (1, 0), (1, 2), (2, 1), (3, 4), (4, 3), (2, 3), (3, 2), (0, 4)]
    behavior = [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (3, 0), (3, 3), (4, 4)]
    return network_from_raw(np.array(social), np.array(behavior))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
