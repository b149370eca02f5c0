import numpy as np
import pytest

from spacetime_spectral import TemporalNetwork


def edge_matrix(n, edges, w=1.0):
    """Symmetric ``n x n`` matrix from 1-based edge pairs."""
    W = np.zeros((n, n))
    for u, v in edges:
        W[u - 1, v - 1] = W[v - 1, u - 1] = w
    return W


def two_slice_net():
    """Two vertices, two slices, spatial weights 1 and 2, unit chain."""
    return TemporalNetwork.from_dense([[[0, 1], [1, 0]], [[0, 2], [2, 0]]])


K5 = [(i, j) for i in range(1, 6) for j in range(i + 1, 6)]
TRIANGLE_PLUS_EDGE = [(1, 2), (2, 3), (1, 3), (4, 5)]


def five_slice_net():
    """Five vertices over five slices: complete at both ends, a triangle and an
    edge in between, with one bridge at the second and fourth slice."""
    layers = [edge_matrix(5, K5),
              edge_matrix(5, TRIANGLE_PLUS_EDGE + [(1, 5)]),
              edge_matrix(5, TRIANGLE_PLUS_EDGE),
              edge_matrix(5, TRIANGLE_PLUS_EDGE + [(3, 4)]),
              edge_matrix(5, K5)]
    return TemporalNetwork.from_dense(layers)


def shifting_clusters_net(seed=0, N=225, T=11, size=25, degree=16, n_match=4):
    """Two 16-regular circulant clusters that shed five vertices per slice.

    Cluster one starts at vertex 50 (0-based) and cluster two at vertex 150;
    both windows move down by five per slice, and only cluster members are
    present. ``n_match`` random perfect matchings of weight ``1/t`` join the
    clusters at slice ``t`` (1-based), so at most four of a vertex's twenty
    edges are intercluster.
    """
    rng = np.random.default_rng(seed)
    layers, presence = [], []
    for t in range(1, T + 1):
        C1 = np.arange(50 - 5 * (t - 1), 50 - 5 * (t - 1) + size)
        C2 = np.arange(150 - 5 * (t - 1), 150 - 5 * (t - 1) + size)
        W = np.zeros((N, N))
        i = np.arange(size)
        for C in (C1, C2):
            for off in range(1, degree // 2 + 1):
                W[C[i], C[(i + off) % size]] = W[C[(i + off) % size], C[i]] = 1.0
        for _ in range(n_match):
            p = rng.permutation(size)
            W[C1, C2[p]] = W[C2[p], C1] = 1.0 / t
        layers.append(W)
        presence.append(np.concatenate([C1, C2]))
    return TemporalNetwork.from_full_layers(layers, presence)


def random_multiplex(rng, N=None, T=None, density=0.5, general_temporal=False):
    N = N or int(rng.integers(2, 8))
    T = T or int(rng.integers(2, 6))
    layers = []
    for _ in range(T):
        A = np.triu(rng.random((N, N)) * (rng.random((N, N)) < density), 1)
        layers.append(A + A.T)
    Wp = None
    if general_temporal:
        B = np.triu(rng.random((T, T)) + 0.1, 1)
        Wp = B + B.T
    return TemporalNetwork.from_dense(layers, temporal_weights=Wp)


@pytest.fixture
def e0():
    return two_slice_net()


@pytest.fixture
def fig_net():
    return five_slice_net()


@pytest.fixture(scope="session")
def toy_nonmultiplex():
    return shifting_clusters_net()


# one line per acceptance criterion, shown at the end of the run
ACCEPTANCE = {}


def record_criterion(number, passed, detail=""):
    ACCEPTANCE[number] = (passed, detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
