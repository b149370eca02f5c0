"""Linking per-slice partitions into spacetime clusters.

Consecutive slices are matched by a restricted maximum-weight edge cover:
every cluster on the larger side picks exactly one partner and every cluster
on the smaller side is picked at least once.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cheeger import Packing
from .exceptions import ValidationError
from .network import TemporalNetwork
from .validation import check_strength

OMEGA = -1


@dataclass(frozen=True, eq=False)
class CoverInstance:
    """Weights between the clusters of slice ``t`` (rows) and ``t+1`` (columns)."""

    C: np.ndarray
    row_ids: tuple = None
    col_ids: tuple = None

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=np.float64))
        if C.ndim != 2 or 0 in C.shape:
            raise ValidationError("cover weights must be a nonempty 2-d array")
        if not np.all(np.isfinite(C)):
            raise ValidationError("cover weights must be finite")
        object.__setattr__(self, "C", C)
        rows = tuple(range(C.shape[0])) if self.row_ids is None else tuple(self.row_ids)
        cols = tuple(range(C.shape[1])) if self.col_ids is None else tuple(self.col_ids)
        if len(rows) != C.shape[0] or len(cols) != C.shape[1]:
            raise ValidationError("cluster ids do not match the weight matrix")
        object.__setattr__(self, "row_ids", rows)
        object.__setattr__(self, "col_ids", cols)


def _as_matrix(inst):
    return inst.C if isinstance(inst, CoverInstance) else CoverInstance(inst).C


def is_cover(A):
    """Both side conditions, after orienting so rows are the larger side."""
    A = np.asarray(A)
    if A.shape[0] < A.shape[1]:
        A = A.T
    return bool(np.all(A.sum(axis=1) == 1) and np.all(A.sum(axis=0) >= 1))


def rmwec(inst):
    """Exact restricted maximum-weight edge cover.

    With rows the larger side, pick an injective column-to-row map ``m``
    maximising ``sum_j C[m(j), j] - rowmax[m(j)]`` (an assignment problem);
    the matched rows take their column, every other row takes its own best
    column (lowest index on ties). Wider-than-tall inputs are transposed.

    Returns
    -------
    A : ndarray of int, same shape as ``C``
    value : float
    """
    C = _as_matrix(inst)
    flip = C.shape[0] < C.shape[1]
    M = C.T if flip else C
    m, n = M.shape
    best_col = np.argmax(M, axis=1)
    rowmax = M[np.arange(m), best_col]
    gain = (M - rowmax[:, None]).T  # n x m
    cols, rows = linear_sum_assignment(gain, maximize=True)
    A = np.zeros((m, n), dtype=np.int64)
    A[np.arange(m), best_col] = 1
    A[rows] = 0
    A[rows, cols] = 1
    # correctly rounded, so equal optima compare equal whatever the order
    value = math.fsum(M[A.astype(bool)].tolist())
    return (A.T if flip else A), value


def brute_force_rmwec(inst):
    """Enumerate every row-to-column choice; for small instances only."""
    C = _as_matrix(inst)
    flip = C.shape[0] < C.shape[1]
    M = C.T if flip else C
    m, n = M.shape
    if n ** m > 2_000_000:
        raise ValidationError("instance too large for enumeration")
    best, arg = -np.inf, None
    for choice in itertools.product(range(n), repeat=m):
        if len(set(choice)) < n:
            continue
        v = math.fsum(M[np.arange(m), choice].tolist())
        if v > best:
            best, arg = v, choice
    A = np.zeros((m, n), dtype=np.int64)
    A[np.arange(m), arg] = 1
    return (A.T if flip else A), float(best)


def _check_partition(P, present, name):
    parts = [np.asarray(X, dtype=np.int64) for X in P]
    allv = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
    if np.unique(allv).size != allv.size:
        raise ValidationError(f"{name} has overlapping clusters")
    if not np.array_equal(np.sort(allv), np.sort(np.asarray(present))):
        raise ValidationError(f"{name} does not partition the vertices present in its slice")
    if any(X.size == 0 for X in parts):
        raise ValidationError(f"{name} contains an empty cluster")
    return parts


def slice_cut_matrix(Pt, Pt1, net: TemporalNetwork, a, t):
    """Negated temporal cut mass between the clusters of slices ``t`` and ``t+1``.

    ``C[i, j] = -a^2 w'_{t,t+1} |X_i cap Y_j|``, counting only vertices
    present in both slices (0-based ``t``).
    """
    a = check_strength(a)
    if not 0 <= t < net.T - 1:
        raise ValidationError(f"t must lie in [0, {net.T - 2}]")
    P = _check_partition(Pt, net.presence[t], "Pt")
    Q = _check_partition(Pt1, net.presence[t + 1], "Pt1")
    w = net.temporal_matrix()[t, t + 1]
    C = np.array([[-a * a * w * np.intersect1d(X, Y).size for Y in Q] for X in P], dtype=float)
    return CoverInstance(C + 0.0)


@dataclass(frozen=True, eq=False)
class LinkResult:
    """Linked labels: ``slice_labels[t][k]`` is the global label of cluster ``k`` at slice ``t``."""

    packing: Packing
    slice_labels: tuple
    K: int


def _reuse(retired, counter):
    if retired:
        return retired.pop(0), counter
    return counter, counter + 1


def link_partitions(seq, net: TemporalNetwork, a, omegas=None):
    """Sweep left to right, carrying cluster labels across slices.

    Parameters
    ----------
    seq : list of list of array-like
        ``seq[t]`` lists the clusters (spatial vertex ids) of slice ``t``.
    net : TemporalNetwork
    a : float
    omegas : list of array-like, optional
        Unclustered vertices per slice. They take part in the matching as an
        extra cluster but never pass a label on and always map to the
        remainder.

    Returns
    -------
    LinkResult
    """
    if len(seq) != net.T:
        raise ValidationError("one partition per slice is required")
    omegas = [np.zeros(0, dtype=np.int64)] * net.T if omegas is None else omegas
    clusters, has_omega = [], []
    for t in range(net.T):
        parts = [np.asarray(X, dtype=np.int64) for X in seq[t]]
        om = np.asarray(omegas[t], dtype=np.int64)
        has_omega.append(om.size > 0)
        clusters.append(parts + ([om] if om.size else []))

    def real(t):
        return len(clusters[t]) - int(has_omega[t])

    labels = [np.array(list(range(real(0))) + ([OMEGA] if has_omega[0] else []))]
    counter, retired = real(0), []
    for t in range(net.T - 1):
        O = -slice_cut_matrix(clusters[t], clusters[t + 1], net, a, t).C
        prev = labels[t]
        nxt = np.full(len(clusters[t + 1]), -2)
        if has_omega[t + 1]:
            nxt[-1] = OMEGA
        if len(clusters[t + 1]) <= len(clusters[t]):
            A, _ = rmwec(O)  # rows: slice t, each row picks one column
            for j in range(len(clusters[t + 1])):
                if nxt[j] == OMEGA:
                    continue
                donors = [i for i in np.flatnonzero(A[:, j]) if prev[i] != OMEGA]
                if donors:
                    i = max(donors, key=lambda i: (O[i, j], -prev[i]))
                    nxt[j] = prev[i]
        else:
            A, _ = rmwec(O.T)  # rows: slice t+1, each row picks one column
            for i in range(len(clusters[t])):
                if prev[i] == OMEGA:
                    continue
                heirs = [j for j in np.flatnonzero(A[:, i]) if nxt[j] != OMEGA]
                if heirs:
                    j = max(heirs, key=lambda j: (O[i, j], -j))
                    nxt[j] = prev[i]
        alive = set(nxt[nxt >= 0].tolist())
        retired = sorted(set(retired) | (set(prev[prev >= 0].tolist()) - alive))
        for j in np.flatnonzero(nxt == -2):
            nxt[j], counter = _reuse(retired, counter)
        labels.append(nxt)

    imap = net.index_map()
    flat = np.full(imap.n, OMEGA, dtype=np.int64)
    for t in range(net.T):
        for X, lab in zip(clusters[t], labels[t]):
            if lab >= 0:
                flat[imap.encode(np.full(X.size, t), X)] = lab
    out = [lab[:real(t)] for t, lab in enumerate(labels)]
    return LinkResult(Packing.from_labels(flat), tuple(out), int(counter))
