import warnings

import numpy as np
import pytest

from spacetime_spectral import (EigenSet, GenSpec, TemporalNetwork, ValidationError,
                                build_adjacency, incidence_spectrum,
                                classify_multiplex, critical_a_multiplex,
                                critical_a_nonmultiplex, generate, identify_spatial_nonmultiplex,
                                inflated_laplacian, smallest_eigenpairs, spatial_eigenpairs)
from spacetime_spectral.exceptions import ConvergenceError
from spacetime_spectral.spectral import (fix_signs, rayleigh_balance, temporal_lift_basis,
                                         temporal_overlap_scores)

from conftest import random_multiplex


def e0_spatial_values(a):
    """Closed form on the span of [u, -u, v, -v] for the two-slice fixture."""
    return np.array([3 + a * a - np.sqrt(1 + a ** 4), 3 + a * a + np.sqrt(1 + a ** 4)])


def test_e0_spectrum(e0):
    es = smallest_eigenpairs(inflated_laplacian(e0, 1.0), 4)
    np.testing.assert_allclose(es.values, [0, 2, 4 - np.sqrt(2), 4 + np.sqrt(2)], atol=1e-12)
    np.testing.assert_allclose(es.values[2:], e0_spatial_values(1.0), atol=1e-12)


def test_connected_laplacian_has_constant_null_vector():
    rng = np.random.default_rng(1)
    net = random_multiplex(rng, N=6, T=3, density=1.0)
    es = smallest_eigenpairs(inflated_laplacian(net, 0.7), 3)
    assert abs(es.values[0]) < 1e-10
    np.testing.assert_allclose(es.vectors[:, 0], 1 / np.sqrt(18), atol=1e-10)


def test_chain_spectrum_closed_form():
    net = TemporalNetwork.from_dense([np.zeros((1, 1))] * 5)
    es = smallest_eigenpairs(inflated_laplacian(net, 1.0), 5)
    k = np.arange(5)
    np.testing.assert_allclose(es.values, 2 * (1 - np.cos(k * np.pi / 5)), atol=1e-12)
    np.testing.assert_allclose(es.values[1:], [0.381966, 1.381966, 2.618034, 3.618034], atol=1e-6)


def test_output_contract():
    rng = np.random.default_rng(2)
    net = random_multiplex(rng, N=7, T=4)
    L = inflated_laplacian(net, 1.1)
    es = smallest_eigenpairs(L, 6)
    assert np.all(np.diff(es.values) >= 0)
    np.testing.assert_allclose(es.vectors.T @ es.vectors, np.eye(6), atol=1e-10)
    assert es.residuals(L).max() <= 1e-9 * max(1.0, es.values.max())
    for j in range(6):
        v = es.vectors[:, j]
        i = np.flatnonzero(np.abs(v) >= np.abs(v).max() * (1 - 1e-10))[0]
        assert v[i] > 0


def test_sparse_path_agrees_with_dense():
    rng = np.random.default_rng(4)
    net = random_multiplex(rng, N=8, T=5, density=0.6)
    L = inflated_laplacian(net, 1.5)
    dense = smallest_eigenpairs(L, 4)
    sparse = smallest_eigenpairs(L, 4, dense_threshold=0)
    np.testing.assert_allclose(sparse.values, dense.values, atol=1e-8)
    assert sparse.residuals(L).max() < 1e-7


def test_fix_signs_ties_go_to_lowest_index():
    V = np.array([[-1.0, 0.5], [1.0, -0.5], [0.2, 0.1]])
    F = fix_signs(V)
    np.testing.assert_array_equal(F[:, 0], [1, -1, -0.2])
    np.testing.assert_array_equal(F[:, 1], [0.5, -0.5, 0.1])


def test_invalid_k(e0):
    with pytest.raises(ValidationError):
        smallest_eigenpairs(inflated_laplacian(e0, 1.0), 0)
    with pytest.raises(ValidationError):
        smallest_eigenpairs(inflated_laplacian(e0, 1.0), 5)


def test_classify_e0(e0):
    es = classify_multiplex(smallest_eigenpairs(inflated_laplacian(e0, 1.0), 4), 2, 2)
    assert es.labels == ("spatial", "temporal", "spatial", "spatial")
    np.testing.assert_allclose(np.abs(es.vectors[:, 1]), 0.5, atol=1e-12)
    f = es.vectors[:, 2]
    np.testing.assert_allclose(f[0], -f[1], atol=1e-12)
    np.testing.assert_allclose(f[2], -f[3], atol=1e-12)


def test_classify_hand_vectors():
    c = 1 + np.sqrt(2)
    V = np.column_stack([np.ones(4) / 2, [1, 1, -1, -1], [1, -1, c, -c]])
    V = V / np.linalg.norm(V, axis=0)
    es = classify_multiplex(EigenSet(np.array([0.0, 2.0, 2.6]), V, ("unclassified",) * 3), 2, 2)
    assert es.labels == ("spatial", "temporal", "spatial")


def test_classify_warns_on_mixtures():
    v = np.array([1.0, 0, -1, 0]) / np.sqrt(2)
    with pytest.warns(RuntimeWarning):
        es = classify_multiplex(EigenSet(np.array([1.0]), v[:, None], ("unclassified",)), 2, 2)
    assert es.labels == ("unclassified",)


def test_classify_rotates_degenerate_eigenspaces():
    # identical layers and a = 1: spatial and temporal eigenvalues collide
    K = np.ones((3, 3)) - np.eye(3)
    net = TemporalNetwork.from_dense([K, K])
    es = smallest_eigenpairs(inflated_laplacian(net, np.sqrt(1.5)), 6)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        out = classify_multiplex(es, 3, 2)
    assert out.labels.count("temporal") == 1
    assert "unclassified" not in out.labels


def test_temporal_lift_basis_is_orthonormal():
    P = temporal_lift_basis(3, 4)
    assert P.shape == (12, 3)
    np.testing.assert_allclose(P.T @ P, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(P.sum(axis=0), 0, atol=1e-12)


def test_spatial_eigenpairs_match_closed_form(e0):
    for a in (0.3, 1.0, 4.0):
        es = spatial_eigenpairs(e0, a, 3)
        np.testing.assert_allclose(es.values, [0, *e0_spatial_values(a)], atol=1e-10)


def test_critical_a_closed_form(e0):
    assert critical_a_multiplex(e0) == pytest.approx(2 / np.sqrt(3), rel=1e-6)


def test_critical_a_zero_spatial_weights():
    net = TemporalNetwork.from_dense([np.zeros((3, 3))] * 4)
    assert critical_a_multiplex(net) == 0.0


def test_critical_a_scales_with_weights():
    rng = np.random.default_rng(8)
    net = random_multiplex(rng, N=5, T=4, density=0.8)
    a1 = critical_a_multiplex(net)
    a2 = critical_a_multiplex(net.scaled(9.0))
    assert a2 == pytest.approx(3 * a1, rel=1e-5)


def test_critical_a_root_condition_on_generated_network():
    net = generate(GenSpec(N=20, T=21, alpha=(0, 1), s=(1, 21), seed=0)).network
    a = critical_a_multiplex(net)
    assert 1 < a < 100
    lam = spatial_eigenpairs(net, a, 2).values[1]
    sigma2 = 2 * (1 - np.cos(np.pi / 21))
    assert abs(lam - a * a * sigma2) <= 1e-4 * a * a * sigma2


def test_critical_a_bracket_failure(e0):
    with pytest.raises(ConvergenceError):
        critical_a_multiplex(e0, bracket=(10.0, 20.0), max_expand=1)
    with pytest.raises(ValidationError):
        critical_a_multiplex(e0, bracket=(2.0, 1.0))


def test_overlap_scores_separate_spatial_from_temporal(toy_nonmultiplex):
    net = toy_nonmultiplex
    a = critical_a_nonmultiplex(net)
    es = smallest_eigenpairs(inflated_laplacian(net, a, multiplex=False), 6)
    sel = identify_spatial_nonmultiplex(es, net, 1)
    assert sel.complete
    m = sel.scores
    spatial = [k for k in range(1, 6) if m[k] < 0.1]
    temporal = [k for k in range(1, 6) if m[k] >= 0.1]
    assert sel.indices[0] == spatial[0] and len(temporal) >= 2
    assert m[spatial].max() * 10 <= m[temporal].min()
    assert m[spatial].max() < 0.01
    assert 0.4 < m[temporal].min() < 0.5


def test_overlap_selection_agrees_with_multiplex_labels():
    rng = np.random.default_rng(11)
    net = random_multiplex(rng, N=6, T=5, density=0.7)
    L = inflated_laplacian(net, 1.2)
    es = classify_multiplex(smallest_eigenpairs(L, 12), 6, 5)
    spatial = [k for k in range(1, 12) if es.labels[k] == "spatial"]
    sel = identify_spatial_nonmultiplex(es, net, len(spatial))
    np.testing.assert_array_equal(sel.indices, spatial)
    scores = temporal_overlap_scores(es, net)
    temporal = [k for k in range(12) if es.labels[k] == "temporal"]
    np.testing.assert_allclose(scores[temporal], 1.0, atol=1e-8)


def test_overlap_selection_reports_shortfall(e0):
    es = smallest_eigenpairs(inflated_laplacian(e0, 1.0), 4)
    with pytest.warns(RuntimeWarning):
        sel = identify_spatial_nonmultiplex(es, e0, 3)
    assert not sel.complete
    np.testing.assert_array_equal(sel.indices, [2, 3])


def test_rayleigh_balance_root(toy_nonmultiplex):
    a = critical_a_nonmultiplex(toy_nonmultiplex)
    assert a == pytest.approx(5.5844, rel=0.2)
    g, temporal_term = rayleigh_balance(toy_nonmultiplex, a)
    assert abs(g) <= 1e-6 * temporal_term


def test_rayleigh_balance_without_spatial_edges():
    z = np.zeros((2, 2))
    net = TemporalNetwork(N=3, layers=(z, z), presence=([0, 1], [1, 2]))
    assert critical_a_nonmultiplex(net) == 0.0


def test_incidence_spectrum_agrees_with_dense_solver():
    rng = np.random.default_rng(12)
    net = random_multiplex(rng, N=5, T=4, density=0.6)
    W = build_adjacency(net, 1.3)
    L = inflated_laplacian(net, 1.3)
    es = incidence_spectrum(W)
    np.testing.assert_allclose(es.values, np.linalg.eigvalsh(L.toarray()), atol=1e-12)
    assert es.residuals(L).max() < 1e-10
    np.testing.assert_allclose(es.vectors.T @ es.vectors, np.eye(20), atol=1e-12)


def test_incidence_spectrum_keeps_small_eigenvalues_at_strong_coupling(e0):
    a = 1e6
    es = incidence_spectrum(build_adjacency(e0, a))
    # cancellation-free form of 3 + a^2 - sqrt(1 + a^4)
    small = 3 - 1 / (a * a + np.sqrt(1 + a ** 4))
    assert abs(es.values[0]) < 1e-6
    assert es.values[1] == pytest.approx(small, rel=1e-9)
    assert es.values[2] == pytest.approx(2 * a * a, rel=1e-12)


def test_incidence_spectrum_of_edgeless_graph():
    es = incidence_spectrum(np.zeros((3, 3)))
    np.testing.assert_array_equal(es.values, 0)
