"""Packings, cut values, Cheeger ratios and an exhaustive oracle for small graphs."""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .assembly import SupraMatrix, graph_laplacian
from .exceptions import ValidationError
from .validation import check_vertex_subset

BRUTE_FORCE_MAX_N = 12
SLACK = 1e-9


def _dense(W):
    if isinstance(W, SupraMatrix):
        W = W.matrix
    if sp.issparse(W):
        return W.toarray()
    return np.asarray(W, dtype=np.float64)


def _matrix(W):
    if isinstance(W, SupraMatrix):
        if W.kind != "adjacency":
            raise ValidationError("expected an adjacency matrix")
        return W.matrix
    return W if sp.issparse(W) else np.asarray(W, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class Packing:
    """Disjoint spacetime vertex sets ``elements`` plus the remainder ``omega``.

    Vertices are flat indices in ``range(n)``. Build from a label vector with
    :meth:`from_labels` (label ``-1`` marks unclustered vertices).
    """

    elements: tuple
    omega: np.ndarray
    n: int

    def __post_init__(self):
        els = tuple(check_vertex_subset(X, self.n, name="packing element") for X in self.elements)
        if any(X.size == 0 for X in els):
            raise ValidationError("packing elements must be nonempty")
        om = check_vertex_subset(self.omega, self.n, name="omega")
        seen = np.zeros(self.n, dtype=np.int64)
        for X in els:
            seen[X] += 1
        seen[om] += 1
        if np.any(seen > 1):
            raise ValidationError("packing elements and omega must be pairwise disjoint")
        if np.any(seen == 0):
            raise ValidationError("packing does not cover every vertex")
        object.__setattr__(self, "elements", els)
        object.__setattr__(self, "omega", om)

    @classmethod
    def from_labels(cls, labels):
        """Elements ordered by label value; ``-1`` is the remainder."""
        labels = np.asarray(labels, dtype=np.int64)
        ks = [k for k in np.unique(labels) if k >= 0]
        return cls(tuple(np.flatnonzero(labels == k) for k in ks),
                   np.flatnonzero(labels < 0), labels.size)

    @property
    def K(self):
        return len(self.elements)

    @property
    def mode(self):
        return "fully" if self.omega.size == 0 else "partially"

    def labels(self):
        lab = np.full(self.n, -1, dtype=np.int64)
        for k, X in enumerate(self.elements):
            lab[X] = k
        return lab

    def __eq__(self, other):
        if not isinstance(other, Packing) or other.n != self.n or other.K != self.K:
            return NotImplemented if not isinstance(other, Packing) else False
        mine = sorted(tuple(X) for X in self.elements)
        theirs = sorted(tuple(X) for X in other.elements)
        return mine == theirs and np.array_equal(self.omega, other.omega)

    __hash__ = None


def _indicator(X, n):
    x = np.zeros(n)
    x[X] = 1.0
    return x


def cut_value(X, W):
    """Total weight of edges with exactly one endpoint in ``X``."""
    M = _matrix(W)
    n = M.shape[0]
    X = check_vertex_subset(X, n)
    x = _indicator(X, n)
    return float(max(x @ (M @ (1.0 - x)), 0.0))


def cheeger_ratio(X, W, normalised=False):
    """``cut(X) / |X|`` or, normalised, ``cut(X) / vol(X)``."""
    M = _matrix(W)
    X = check_vertex_subset(X, M.shape[0])
    if X.size == 0:
        raise ValidationError("Cheeger ratio of an empty set")
    c = cut_value(X, M)
    if not normalised:
        return c / X.size
    vol = float(np.asarray(M[X].sum()))
    if vol <= 0:
        raise ValidationError("Cheeger ratio undefined: zero volume")
    return c / vol


def packing_score(p: Packing, W, normalised=False, include_omega=False):
    """Largest Cheeger ratio over the elements (and optionally the remainder)."""
    sets = list(p.elements)
    if include_omega and p.omega.size:
        sets.append(p.omega)
    if not sets:
        raise ValidationError("cannot score an empty packing")
    return max(cheeger_ratio(X, W, normalised) for X in sets)


def brute_force_cheeger(W, K, normalised=False, max_n=BRUTE_FORCE_MAX_N):
    """Exact ``h_K`` by enumerating vertex-to-element assignments.

    Element labels are canonicalised by first occurrence, the search runs in
    lexicographic order and only strict improvements are kept, so the packing
    returned is the lexicographically smallest optimal one. Zero-volume
    elements are infeasible in the normalised case.

    Returns
    -------
    h : float
    packing : Packing
    """
    A = _dense(W)
    n = A.shape[0]
    if n > max_n:
        raise ValidationError(f"brute force limited to {max_n} vertices, got {n}")
    K = int(K)
    if not 1 <= K <= n:
        raise ValidationError(f"K must lie in [1, {n}]")
    deg = A.sum(axis=1)
    weight = deg if normalised else np.ones(n)
    if normalised and np.any(deg <= 0):
        warnings.warn("isolated vertices cannot belong to any element", RuntimeWarning,
                      stacklevel=2)
    # suffix sums of weights bound the final size/volume of each element
    tail = np.concatenate([np.cumsum(weight[::-1])[::-1], [0.0]])

    # upper bound from K singletons of smallest ratio; inflated slightly so the
    # optimum is always found as a strict improvement
    single = np.where(weight > 0, deg / np.where(weight > 0, weight, 1.0), np.inf)
    seed = np.sort(single)[K - 1]
    best = [seed * (1 + 1e-6) + 1e-9 if np.isfinite(seed) else np.inf, None]
    lab = np.zeros(n, dtype=np.int64)  # 0 = remainder, 1..K = elements
    size = np.zeros(K + 1)
    # cutmass[k]: weight between element k and assigned vertices with other labels
    cutmass = np.zeros(K + 1)

    def exact(lab):
        # same arithmetic as cheeger_ratio, so scores of equal sets agree bitwise
        worst = 0.0
        for k in range(1, K + 1):
            x = (lab == k).astype(np.float64)
            c = max(x @ (A @ (1.0 - x)), 0.0)
            worst = max(worst, c / (float(A[lab == k].sum()) if normalised else x.sum()))
        return float(worst)

    def rec(i, used):
        if K - used > n - i:
            return
        if i == n:
            # incremental sums drift by roundoff: rescore near-optimal leaves exactly
            if (cutmass[1:] / size[1:]).max() <= best[0] * (1 + SLACK) + SLACK:
                val = exact(lab)
                if val < best[0]:
                    best[0], best[1] = val, lab.copy()
            return
        # prune: final ratio of element k >= current crossing mass / max attainable size
        with np.errstate(divide="ignore", invalid="ignore"):
            lb = np.where(size[1:] > 0, cutmass[1:] / (size[1:] + tail[i]), 0.0)
        if lb.max(initial=0.0) > best[0] * (1 + SLACK) + SLACK:
            return
        m = np.bincount(lab[:i], weights=A[i, :i], minlength=K + 1)
        total = m.sum()
        for k in range(0, min(used + 1, K) + 1):
            if normalised and k > 0 and weight[i] <= 0:
                continue
            # edges from i to other labels now cross, for both sides
            delta = m.copy()
            delta[k] = total - m[k]
            lab[i] = k
            cutmass[:] += delta
            size[k] += weight[i]
            rec(i + 1, max(used, k))
            size[k] -= weight[i]
            cutmass[:] -= delta
            lab[i] = 0

    rec(0, 0)
    if best[1] is None:
        raise ValidationError("no feasible packing")
    labels = best[1] - 1
    return best[0], Packing.from_labels(labels)


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    lhs: float
    rhs: float

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def holds(self):
        return self.slack >= -1e-12 * max(1.0, abs(self.rhs))


def check_cheeger_inequalities(W, eigenvalues=None, normalised_eigenvalues=None):
    """Check ``h_2 <= sqrt(2 lambda_2 d_max)`` and ``hbar_2 <= sqrt(2 lambdabar_2)``.

    Eigenvalues are computed when not supplied. The normalised check is
    skipped (``None``) for graphs with isolated vertices.

    Returns
    -------
    dict
        ``{"unnormalised": InequalityCheck, "normalised": InequalityCheck or None,
        "k_way": str}``
    """
    A = _dense(W)
    n = A.shape[0]
    deg = A.sum(axis=1)
    if eigenvalues is None:
        eigenvalues = np.linalg.eigvalsh(graph_laplacian(A))
    lam2 = max(float(np.sort(eigenvalues)[1]), 0.0)
    h2, _ = brute_force_cheeger(A, 2)
    out = {"unnormalised": InequalityCheck("h2 <= sqrt(2 lambda2 dmax)", h2,
                                           float(np.sqrt(2 * lam2 * deg.max())))}
    if np.all(deg > 0):
        if normalised_eigenvalues is None:
            s = 1.0 / np.sqrt(deg)
            normalised_eigenvalues = np.linalg.eigvalsh(np.eye(n) - s[:, None] * A * s)
        nlam2 = max(float(np.sort(normalised_eigenvalues)[1]), 0.0)
        hb2, _ = brute_force_cheeger(A, 2, normalised=True)
        out["normalised"] = InequalityCheck("hbar2 <= sqrt(2 lambdabar2)", hb2,
                                            float(np.sqrt(2 * nlam2)))
    else:
        out["normalised"] = None
    out["k_way"] = "informational only: the K-way bound carries an unspecified constant"
    return out
