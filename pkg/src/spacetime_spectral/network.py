"""Temporal network container and the spacetime vertex ordering.

Vertices are 0-based internally: slice ``t`` in ``range(T)`` and spatial
vertex ``x`` in ``range(N)``. File formats use 1-based ids (see ``io``).
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import NotMultiplexError, ValidationError
from .validation import check_weight_matrix


def chain_weights(T):
    """Unit-weight nearest-neighbour chain on ``T`` slices."""
    W = np.zeros((T, T))
    idx = np.arange(T - 1)
    W[idx, idx + 1] = 1.0
    W[idx + 1, idx] = 1.0
    return W


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SpacetimeIndexMap:
    """Bijection between present ``(t, x)`` pairs and ``range(n)``.

    In the multiplex case ``i(t, x) = N*t + x``; otherwise slices are laid out
    consecutively and ``x`` is replaced by its rank inside the slice.
    """

    N: int
    presence: tuple
    multiplex: bool
    offsets: np.ndarray = field(init=False)
    _rank: tuple = field(init=False, repr=False)

    def __post_init__(self):
        sizes = np.array([len(p) for p in self.presence], dtype=np.int64)
        object.__setattr__(self, "offsets", _frozen(np.concatenate([[0], np.cumsum(sizes)])))
        ranks = []
        for p in self.presence:
            r = np.full(self.N, -1, dtype=np.int64)
            r[p] = np.arange(len(p))
            r.setflags(write=False)
            ranks.append(r)
        object.__setattr__(self, "_rank", tuple(ranks))

    @property
    def T(self):
        return len(self.presence)

    @property
    def n(self):
        return int(self.offsets[-1])

    @property
    def mode(self):
        return "multiplex" if self.multiplex else "nonmultiplex"

    def slice_sizes(self):
        return np.diff(self.offsets)

    def slice_indices(self, t):
        """Flat indices of the vertices present in slice ``t``."""
        return np.arange(self.offsets[t], self.offsets[t + 1])

    def encode(self, t, x):
        t = np.asarray(t, dtype=np.int64)
        x = np.asarray(x, dtype=np.int64)
        if np.any((t < 0) | (t >= self.T)) or np.any((x < 0) | (x >= self.N)):
            raise ValidationError("(t, x) out of range")
        rank = np.array([self._rank[tt][xx] for tt, xx in zip(np.ravel(t), np.ravel(x))])
        if np.any(rank < 0):
            raise ValidationError("vertex not present in the requested slice")
        out = self.offsets[np.ravel(t)] + rank
        return int(out[0]) if t.ndim == 0 else out.reshape(t.shape)

    def decode(self, i):
        """Inverse of :meth:`encode`; returns ``(t, x)`` arrays."""
        i = np.asarray(i, dtype=np.int64)
        if np.any((i < 0) | (i >= self.n)):
            raise ValidationError("flat index out of range")
        t = np.searchsorted(self.offsets, i, side="right") - 1
        flat_t = np.ravel(t)
        flat_i = np.ravel(i)
        x = np.array([self.presence[tt][ii - self.offsets[tt]] for tt, ii in zip(flat_t, flat_i)],
                     dtype=np.int64)
        if i.ndim == 0:
            return int(t), int(x[0])
        return t, x.reshape(i.shape)

    def slice_of(self):
        """Slice index of every flat vertex."""
        return np.repeat(np.arange(self.T), self.slice_sizes())

    def vertex_of(self):
        """Spatial vertex id of every flat vertex."""
        return np.concatenate([np.asarray(p, dtype=np.int64) for p in self.presence]) \
            if self.T else np.zeros(0, dtype=np.int64)

    def embed(self, F):
        """Zero-pad a flat vector (or matrix of column vectors) into the N*T frame."""
        F = np.asarray(F, dtype=np.float64)
        out = np.zeros((self.T * self.N,) + F.shape[1:])
        out[self.slice_of() * self.N + self.vertex_of()] = F
        return out


@dataclass(frozen=True, eq=False)
class TemporalNetwork:
    """Sequence of spatial weight layers over a vertex superset ``range(N)``.

    Parameters
    ----------
    N : int
        Size of the spatial vertex superset.
    layers : sequence of ndarray
        ``layers[t]`` is the ``N_t x N_t`` weight matrix among the vertices
        ``presence[t]`` (in increasing id order).
    presence : sequence of array-like, optional
        Present vertex ids per slice; defaults to all vertices (multiplex).
    temporal_weights : ndarray of shape (T, T), optional
        Space-independent inter-slice weights. ``None`` means the unit chain.
        Only the multiplex case accepts a general matrix.
    """

    N: int
    layers: tuple
    presence: tuple = None
    temporal_weights: np.ndarray = None

    def __post_init__(self):
        N = int(self.N)
        if N < 1:
            raise ValidationError("N must be positive")
        layers = tuple(self.layers)
        T = len(layers)
        if T < 1:
            raise ValidationError("a temporal network needs at least one slice")
        if self.presence is None:
            presence = tuple(np.arange(N) for _ in range(T))
        else:
            presence = tuple(np.asarray(p, dtype=np.int64) for p in self.presence)
        if len(presence) != T:
            raise ValidationError("presence and layers disagree on the number of slices")
        checked = []
        for t, (p, W) in enumerate(zip(presence, layers)):
            if p.size == 0:
                raise ValidationError(f"slice {t} has no present vertices")
            if np.any(np.diff(p) <= 0):
                order = np.argsort(p)
                if np.any(np.diff(p[order]) == 0):
                    raise ValidationError(f"slice {t} lists a vertex twice")
                raise ValidationError(f"presence of slice {t} must be sorted increasingly")
            if p[0] < 0 or p[-1] >= N:
                raise ValidationError(f"slice {t} references vertices outside [0, {N})")
            W = check_weight_matrix(W, name=f"layer {t}")
            if W.shape[0] != p.size:
                raise ValidationError(
                    f"layer {t} has shape {W.shape} but {p.size} vertices are present")
            checked.append(_frozen(W))
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "layers", tuple(checked))
        object.__setattr__(self, "presence", tuple(_frozen(p) for p in presence))
        multiplex = all(p.size == N for p in presence)
        if self.temporal_weights is not None:
            Wp = check_weight_matrix(self.temporal_weights, name="temporal_weights")
            if Wp.shape != (T, T):
                raise ValidationError(f"temporal_weights must be {T}x{T}")
            if not multiplex:
                raise ValidationError(
                    "general temporal weights are only supported for multiplex networks")
            object.__setattr__(self, "temporal_weights", _frozen(Wp))

    @classmethod
    def from_dense(cls, layers, temporal_weights=None):
        """Multiplex network from a list (or 3-d array) of ``N x N`` layers."""
        layers = [np.asarray(W, dtype=np.float64) for W in layers]
        if not layers:
            raise ValidationError("no layers given")
        return cls(N=layers[0].shape[0], layers=tuple(layers),
                   temporal_weights=temporal_weights)

    @classmethod
    def from_full_layers(cls, layers, presence):
        """Non-multiplex network from ``N x N`` layers restricted to ``presence``."""
        layers = [np.asarray(W, dtype=np.float64) for W in layers]
        presence = [np.sort(np.asarray(p, dtype=np.int64)) for p in presence]
        sub = [W[np.ix_(p, p)] for W, p in zip(layers, presence)]
        return cls(N=layers[0].shape[0], layers=tuple(sub), presence=tuple(presence))

    @property
    def T(self):
        return len(self.layers)

    @property
    def is_multiplex(self):
        return all(p.size == self.N for p in self.presence)

    @property
    def slice_sizes(self):
        return np.array([p.size for p in self.presence])

    @property
    def n_spacetime(self):
        return int(self.slice_sizes.sum())

    def index_map(self):
        return SpacetimeIndexMap(N=self.N, presence=self.presence, multiplex=self.is_multiplex)

    def temporal_matrix(self):
        """The ``T x T`` inter-slice weight matrix (chain when unspecified)."""
        if self.temporal_weights is None:
            return chain_weights(self.T)
        return np.array(self.temporal_weights)

    def full_layer(self, t):
        """Layer ``t`` embedded into an ``N x N`` matrix (absent rows are zero)."""
        p = self.presence[t]
        W = np.zeros((self.N, self.N))
        W[np.ix_(p, p)] = self.layers[t]
        return W

    def require_multiplex(self, what="this operation"):
        if not self.is_multiplex:
            raise NotMultiplexError(f"{what} requires a multiplex network")

    def scaled(self, c):
        """Copy with every spatial weight multiplied by ``c``."""
        return TemporalNetwork(N=self.N, layers=tuple(c * W for W in self.layers),
                               presence=self.presence, temporal_weights=self.temporal_weights)
