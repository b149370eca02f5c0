import itertools

import networkx as nx
import numpy as np
import pytest

from spacetime_spectral import (Packing, ValidationError, brute_force_cheeger, build_adjacency,
                                check_cheeger_inequalities, cheeger_ratio, cut_value,
                                packing_score)

from conftest import edge_matrix


def naive_h(W, K, normalised=False):
    """Plain enumeration of every assignment to {remainder, 1..K}."""
    n = W.shape[0]
    deg = W.sum(axis=1)
    best = np.inf
    for lab in itertools.product(range(K + 1), repeat=n):
        lab = np.array(lab)
        worst = 0.0
        for k in range(1, K + 1):
            X = lab == k
            if not X.any():
                worst = np.inf
                break
            size = deg[X].sum() if normalised else X.sum()
            if size == 0:
                worst = np.inf
                break
            worst = max(worst, W[X][:, ~X].sum() / size)
        best = min(best, worst)
    return best


def random_graph(rng, n, p=0.5):
    A = np.triu(rng.random((n, n)) * (rng.random((n, n)) < p), 1)
    return A + A.T


def test_cut_by_hand(e0):
    W = build_adjacency(e0, 1.0)
    assert cut_value([0, 2], W) == 3.0
    assert cheeger_ratio([0, 2], W) == 1.5
    assert cut_value(range(4), W) == 0.0
    assert cut_value([], W) == 0.0
    assert cheeger_ratio(range(4), W) == 0.0


def test_complete_graph_pair():
    K4 = np.ones((4, 4)) - np.eye(4)
    assert cheeger_ratio([1, 3], K4) == 2.0


def test_ratio_errors():
    W = np.array([[0.0, 1, 0], [1, 0, 0], [0, 0, 0]])
    with pytest.raises(ValidationError):
        cheeger_ratio([], W)
    with pytest.raises(ValidationError):
        cheeger_ratio([2], W, normalised=True)
    with pytest.raises(ValidationError):
        cut_value([3], W)


def test_normalised_ratio(e0):
    W = build_adjacency(e0, 1.0)
    assert cheeger_ratio([0, 2], W, normalised=True) == pytest.approx(3 / 5)


def test_packing_score(e0):
    W = build_adjacency(e0, 1.0)
    p = Packing(([0, 2], [1, 3]), [], 4)
    assert packing_score(p, W) == 1.5
    assert packing_score(Packing((range(4),), [], 4), W) == 0.0
    q = Packing(([0],), [1, 2, 3], 4)
    assert packing_score(q, W) == 2.0
    assert packing_score(q, W, include_omega=True) == 2.0
    with pytest.raises(ValidationError):
        packing_score(Packing((), range(4), 4), W)


def test_packing_invariants():
    p = Packing.from_labels([0, 0, -1, 1])
    assert p.K == 2 and p.mode == "partially"
    np.testing.assert_array_equal(p.labels(), [0, 0, -1, 1])
    assert Packing.from_labels([1, 1, 0]).mode == "fully"
    with pytest.raises(ValidationError):
        Packing(([0, 1], [1]), [2], 3)
    with pytest.raises(ValidationError):
        Packing(([0, 1],), [], 3)
    with pytest.raises(ValidationError):
        Packing(([0, 1], []), [2], 3)
    assert Packing(([2], [0, 1]), [], 3) == Packing(([0, 1], [2]), [], 3)


def test_two_triangles_with_bridge():
    W = edge_matrix(6, [(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6), (3, 4)])
    h, p = brute_force_cheeger(W, 2)
    assert h == pytest.approx(1 / 3)
    assert sorted(map(tuple, p.elements)) == [(0, 1, 2), (3, 4, 5)]
    h1, p1 = brute_force_cheeger(W, 1)
    assert h1 == 0.0 and p1.elements[0].size == 6


@pytest.mark.parametrize("normalised", [False, True])
def test_brute_force_matches_naive_enumeration(normalised):
    rng = np.random.default_rng(0)
    for _ in range(12):
        n = int(rng.integers(2, 7))
        W = random_graph(rng, n, 0.7)
        if normalised and np.any(W.sum(axis=1) == 0):
            continue
        for K in range(1, min(n, 3) + 1):
            h, p = brute_force_cheeger(W, K, normalised)
            assert h == pytest.approx(naive_h(W, K, normalised), rel=1e-12, abs=1e-15)
            assert packing_score(p, W, normalised) == h


def test_brute_force_limits():
    with pytest.raises(ValidationError):
        brute_force_cheeger(np.zeros((13, 13)), 2)
    with pytest.raises(ValidationError):
        brute_force_cheeger(np.zeros((3, 3)), 4)


def test_brute_force_is_deterministic():
    W = edge_matrix(4, [(1, 2), (3, 4)])
    _, p = brute_force_cheeger(W, 2)
    # lexicographically smallest labelling: vertex 1 in the first element
    assert sorted(map(tuple, p.elements)) == [(0, 1), (2, 3)] or p.labels()[0] == 0


def test_monotone_in_K():
    rng = np.random.default_rng(1)
    for _ in range(10):
        W = random_graph(rng, 7)
        hs = [brute_force_cheeger(W, K)[0] for K in (1, 2, 3, 4)]
        assert all(x <= y for x, y in zip(hs, hs[1:]))


def test_inequalities_on_random_graphs():
    rng = np.random.default_rng(2)
    for _ in range(8):
        W = random_graph(rng, int(rng.integers(3, 9)), 0.6)
        rep = check_cheeger_inequalities(W)
        assert rep["unnormalised"].holds and rep["unnormalised"].slack >= 0
        if rep["normalised"] is not None:
            assert rep["normalised"].holds and rep["normalised"].slack >= 0
        assert "informational" in rep["k_way"]


def test_regular_graph_checks_coincide_after_scaling():
    W = nx.to_numpy_array(nx.circulant_graph(8, [1, 2]))
    rep = check_cheeger_inequalities(W)
    d = 4
    u, n = rep["unnormalised"], rep["normalised"]
    assert u.lhs == pytest.approx(d * n.lhs)
    assert u.rhs == pytest.approx(d * n.rhs)


def test_disconnected_graph_is_tight():
    W = edge_matrix(4, [(1, 2), (3, 4)])
    u = check_cheeger_inequalities(W)["unnormalised"]
    assert u.lhs == 0.0 and u.rhs == pytest.approx(0.0, abs=1e-7)
    assert u.holds


def test_isolated_vertex_skips_normalised_check():
    W = edge_matrix(3, [(1, 2)])
    rep = check_cheeger_inequalities(W)
    assert rep["normalised"] is None
    with pytest.warns(RuntimeWarning):
        brute_force_cheeger(W, 1, normalised=True)


def test_merging_elements_never_exceeds_the_worse_ratio():
    rng = np.random.default_rng(4)
    for _ in range(20):
        W = random_graph(rng, 8)
        lab = rng.integers(0, 3, 8)
        if len(set(lab)) < 3:
            continue
        X, Y = np.flatnonzero(lab == 0), np.flatnonzero(lab == 1)
        merged = cheeger_ratio(np.r_[X, Y], W)
        assert merged <= max(cheeger_ratio(X, W), cheeger_ratio(Y, W)) + 1e-12
