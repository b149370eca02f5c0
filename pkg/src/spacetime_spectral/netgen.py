"""Synthetic temporal networks with planted clusters that appear, split and fade.

A sequence of states ``(alpha_i, s_i)`` fixes the number of dense clusters
present at slice ``s_i`` (1-based). Slices between two states interpolate
the edge sets by toggling the differing edges in a random order.
"""

import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .exceptions import ValidationError
from .network import TemporalNetwork


@dataclass(frozen=True)
class GenSpec:
    """Generator parameters.

    Parameters
    ----------
    N, T : int
        Number of vertices and slices.
    alpha : tuple of int
        Cluster count of each state.
    s : tuple of int
        1-based slice of each state; strictly increasing, from 1 to ``T``.
    eta : float
        Cluster quality in (0, 1]; each cluster gets ``floor((1 - eta) c)``
        edges to the remaining vertices (``c`` the cluster size).
    beta : float
        Clustered/unclustered ratio; clusters have ``floor(N / (alpha + beta))`` vertices.
    gamma : int
        Density divisor for the cluster-free state (``floor(N / gamma)``-regular).
    seed : int
    """

    N: int
    T: int
    alpha: tuple
    s: tuple
    eta: float = 0.8
    beta: float = 1.5
    gamma: int = 3
    seed: int = 0

    def __post_init__(self):
        alpha = tuple(int(x) for x in self.alpha)
        s = tuple(int(x) for x in self.s)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "s", s)
        if self.N < 2 or self.T < 1:
            raise ValidationError("need N >= 2 and T >= 1")
        if len(alpha) != len(s) or not alpha:
            raise ValidationError("alpha and s must be nonempty and of equal length")
        if any(x < 0 for x in alpha):
            raise ValidationError("cluster counts must be nonnegative")
        if s[0] != 1 or s[-1] != self.T or any(b <= a for a, b in zip(s, s[1:])):
            raise ValidationError("state times must increase strictly from 1 to T")
        if not 0 < self.eta <= 1:
            raise ValidationError("eta must lie in (0, 1]")
        if self.beta <= 0:
            raise ValidationError("beta must be positive")
        if int(self.gamma) != self.gamma or self.gamma < 1:
            raise ValidationError("gamma must be a positive integer")

    def cluster_size(self, alpha):
        return int(math.floor(self.N / (alpha + self.beta)))


@dataclass(frozen=True, eq=False)
class GeneratedNetwork:
    """Generator output.

    ``truth[t, x]`` is the planted cluster of vertex ``x`` in slice ``t``
    (0-based), taken from the nearest state; ``-1`` marks vertices outside
    every planted cluster.
    """

    network: TemporalNetwork
    truth: np.ndarray
    state_edges: tuple
    spec: GenSpec


def _regular_edges(nodes, d, rng):
    n = len(nodes)
    if d >= n:
        raise ValidationError(f"a {d}-regular graph on {n} vertices is infeasible")
    while d > 0 and (n * d) % 2:
        d -= 1
    if d <= 0:
        return set()
    G = nx.random_regular_graph(d, n, seed=int(rng.integers(2**31 - 1)))
    return {tuple(sorted((int(nodes[u]), int(nodes[v])))) for u, v in G.edges()}


def state_edges(spec: GenSpec, alpha, rng):
    """Edge set and planted labels of one state."""
    N = spec.N
    labels = np.full(N, -1, dtype=np.int64)
    if alpha == 0:
        return _regular_edges(np.arange(N), N // spec.gamma, rng), labels
    c = spec.cluster_size(alpha)
    if c < 2:
        raise ValidationError(f"cluster size {c} < 2 for alpha={alpha}")
    if alpha * c > N:
        raise ValidationError(f"{alpha} clusters of size {c} exceed N={N}")
    edges = set()
    for k in range(alpha):
        block = np.arange(k * c, (k + 1) * c)
        labels[block] = k
        edges.update((int(u), int(v)) for i, u in enumerate(block) for v in block[i + 1:])
    rest = np.arange(alpha * c, N)
    if rest.size:
        edges |= _regular_edges(rest, min(c, rest.size), rng)
        # floor((1 - eta) c), guarded against 0.2 * 5 = 0.9999...
        m = int(math.floor((1 - spec.eta) * c + 1e-9))
        for k in range(alpha):
            block = np.arange(k * c, (k + 1) * c)
            pairs = [(int(u), int(v)) for u in block for v in rest]
            m_k = min(m, len(pairs))
            for i in rng.choice(len(pairs), size=m_k, replace=False):
                edges.add(tuple(sorted(pairs[i])))
    return edges, labels


def _adjacency(edges, N):
    W = np.zeros((N, N))
    if edges:
        u, v = np.array(sorted(edges)).T
        W[u, v] = 1.0
        W[v, u] = 1.0
    return W


def generate(spec: GenSpec) -> GeneratedNetwork:
    """Build the multiplex network and its planted labels."""
    rng = np.random.default_rng(spec.seed)
    states = [state_edges(spec, a, rng) for a in spec.alpha]
    slices = [None] * spec.T
    for i, (E, _) in enumerate(states):
        slices[spec.s[i] - 1] = set(E)
    for i in range(len(states) - 1):
        E0, E1 = states[i][0], states[i + 1][0]
        delta = sorted(E0 ^ E1)
        order = rng.permutation(len(delta))
        delta = [delta[j] for j in order]
        gap = spec.s[i + 1] - spec.s[i]
        quota = math.ceil(len(delta) / gap) if delta else 0
        for k in range(1, gap):
            E = set(E0)
            for e in delta[:k * quota]:
                E ^= {e}
            slices[spec.s[i] - 1 + k] = E
    layers = tuple(_adjacency(E, spec.N) for E in slices)
    times = np.array(spec.s) - 1
    truth = np.empty((spec.T, spec.N), dtype=np.int64)
    for t in range(spec.T):
        i = int(np.argmin(np.abs(times - t)))
        truth[t] = states[i][1]
    return GeneratedNetwork(TemporalNetwork.from_dense(layers), truth,
                            tuple(frozenset(E) for E, _ in states), spec)
