"""Assembly of spacetime adjacency, Laplacian and degree objects.

Multiplex networks use ``W(a) = blockdiag(W_1..W_T) + a^2 (W' kron I_N)``;
non-multiplex networks join consecutive copies of a present vertex with a
temporal edge of weight ``a^2``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import ValidationError
from .network import SpacetimeIndexMap, TemporalNetwork
from .validation import check_strength, check_vertex_subset

DROP_TOL = 1e-15

KINDS = ("adjacency", "laplacian", "normalised-laplacian")


def _clean(M):
    M = sp.csr_matrix(M, dtype=np.float64)
    M.data[np.abs(M.data) < DROP_TOL] = 0.0
    M.eliminate_zeros()
    M.sort_indices()
    return M


@dataclass(frozen=True, eq=False)
class SupraMatrix:
    """Symmetric sparse spacetime matrix with its spatial/temporal parts.

    ``matrix == spatial + a**2 * temporal`` for the adjacency and the
    unnormalised Laplacian. ``temporal`` carries unit strength (``a = 1``).
    """

    matrix: sp.csr_matrix
    kind: str
    a: float
    index_map: SpacetimeIndexMap
    spatial: sp.csr_matrix = None
    temporal: sp.csr_matrix = None

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def shape(self):
        return self.matrix.shape

    def toarray(self):
        return self.matrix.toarray()

    def quadratic_form(self, f):
        f = np.asarray(f, dtype=np.float64)
        return float(f @ (self.matrix @ f))

    def to_triplets(self):
        """Coordinate triplets ``(row, col, value)`` in row-major order."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]


@dataclass(frozen=True, eq=False)
class DegreeData:
    """Vertex degrees of a spacetime adjacency.

    ``temporal`` is indexed by slice for multiplex networks (it does not
    depend on the spatial vertex) and by flat vertex otherwise.
    """

    total: np.ndarray
    spatial: np.ndarray
    temporal: np.ndarray
    a: float
    multiplex: bool

    def volume(self, X):
        """Total degree of the flat vertex subset ``X``."""
        X = check_vertex_subset(X, self.total.size)
        return float(self.total[X].sum())


def spatial_block(net):
    return _clean(sp.block_diag([sp.csr_matrix(W) for W in net.layers], format="csr"))


def multiplex_temporal_block(net):
    return _clean(sp.kron(sp.csr_matrix(net.temporal_matrix()), sp.identity(net.N), format="csr"))


def nonmultiplex_temporal_block(net):
    imap = net.index_map()
    rows, cols = [], []
    for t in range(net.T - 1):
        common = np.intersect1d(net.presence[t], net.presence[t + 1], assume_unique=True)
        if common.size == 0:
            continue
        rows.append(imap.encode(np.full(common.size, t), common))
        cols.append(imap.encode(np.full(common.size, t + 1), common))
    n = imap.n
    if not rows:
        return sp.csr_matrix((n, n))
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    M = sp.coo_matrix((np.ones(r.size), (r, c)), shape=(n, n))
    return _clean(M + M.T)


def build_multiplex_adjacency(net: TemporalNetwork, a: float) -> SupraMatrix:
    """Spacetime adjacency ``W(a)`` of a multiplex network."""
    net.require_multiplex("build_multiplex_adjacency")
    a = check_strength(a)
    Ws = spatial_block(net)
    Wt = multiplex_temporal_block(net)
    return SupraMatrix(_clean(Ws + a * a * Wt), "adjacency", a, net.index_map(), Ws, Wt)


def build_nonmultiplex_adjacency(net: TemporalNetwork, a: float) -> SupraMatrix:
    """Spacetime adjacency over present vertices, chain coupling only."""
    if net.temporal_weights is not None:
        raise ValidationError("the non-multiplex assembly only supports chain coupling")
    a = check_strength(a)
    Ws = spatial_block(net)
    Wt = nonmultiplex_temporal_block(net)
    return SupraMatrix(_clean(Ws + a * a * Wt), "adjacency", a, net.index_map(), Ws, Wt)


def build_adjacency(net, a, multiplex=None):
    """Dispatch on the network type (or force the non-multiplex rule)."""
    if multiplex is None:
        multiplex = net.is_multiplex
    if multiplex:
        return build_multiplex_adjacency(net, a)
    return build_nonmultiplex_adjacency(net, a)


def graph_laplacian(W):
    """``D - W`` for a symmetric sparse (or dense) weight matrix."""
    if sp.issparse(W):
        d = np.asarray(W.sum(axis=1)).ravel()
        return _clean(sp.diags(d) - W)
    W = np.asarray(W, dtype=np.float64)
    return np.diag(W.sum(axis=1)) - W


def assemble_laplacian(W: SupraMatrix, normalised: bool = False) -> SupraMatrix:
    """Unnormalised ``D - W`` or normalised ``I - D^-1/2 W D^-1/2`` Laplacian."""
    if W.kind != "adjacency":
        raise ValidationError("assemble_laplacian expects an adjacency SupraMatrix")
    if not normalised:
        Ls = graph_laplacian(W.spatial) if W.spatial is not None else None
        Lt = graph_laplacian(W.temporal) if W.temporal is not None else None
        return SupraMatrix(graph_laplacian(W.matrix), "laplacian", W.a, W.index_map, Ls, Lt)
    d = np.asarray(W.matrix.sum(axis=1)).ravel()
    if np.any(d <= 0):
        raise ValidationError(
            f"normalised Laplacian undefined: {int(np.sum(d <= 0))} isolated vertices")
    s = sp.diags(1.0 / np.sqrt(d))
    L = sp.identity(W.n, format="csr") - s @ W.matrix @ s
    L = _clean((L + L.T) * 0.5)
    return SupraMatrix(L, "normalised-laplacian", W.a, W.index_map)


def inflated_laplacian(net, a, normalised=False, multiplex=None):
    """Shortcut: assemble the adjacency and its Laplacian in one call."""
    return assemble_laplacian(build_adjacency(net, a, multiplex), normalised)


def dynamic_adjacency(net):
    """Time average of the spatial layers."""
    net.require_multiplex("the dynamic Laplacian")
    return np.mean([np.asarray(W) for W in net.layers], axis=0)


def dynamic_laplacian(net: TemporalNetwork) -> np.ndarray:
    """Unnormalised Laplacian of the time-averaged spatial adjacency (N x N)."""
    return graph_laplacian(dynamic_adjacency(net))


def temporal_laplacian(net):
    """Laplacian of the ``T x T`` inter-slice weights."""
    return graph_laplacian(net.temporal_matrix())


def degrees(W: SupraMatrix, net: TemporalNetwork, a: float = None) -> DegreeData:
    """Total, spatial and temporal degree vectors of a spacetime adjacency."""
    if W.kind != "adjacency":
        raise ValidationError("degrees expects an adjacency SupraMatrix")
    if W.n != net.n_spacetime:
        raise ValidationError(f"dimension mismatch: matrix {W.n}, network {net.n_spacetime}")
    a = W.a if a is None else check_strength(a)
    spatial = np.asarray(W.spatial.sum(axis=1)).ravel()
    if net.is_multiplex and W.index_map.multiplex:
        temporal = net.temporal_matrix().sum(axis=1)
        total = spatial + a * a * np.repeat(temporal, net.N)
    else:
        temporal = np.asarray(W.temporal.sum(axis=1)).ravel()
        total = spatial + a * a * temporal
    return DegreeData(total=total, spatial=spatial, temporal=temporal, a=a,
                      multiplex=W.index_map.multiplex)
