"""Low eigenpairs of spacetime Laplacians and their space/time classification.

For a multiplex network the lifts ``g kron 1_N`` with ``g`` orthogonal to the
constant form an invariant subspace of ``L(a)`` on which it acts as
``a^2 L'``. Everything orthogonal to it is "spatial". Classification and the
critical diffusion strength both work with this splitting directly.
"""

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (SupraMatrix, assemble_laplacian,
                       build_nonmultiplex_adjacency, dynamic_laplacian, spatial_block,
                       graph_laplacian, multiplex_temporal_block, nonmultiplex_temporal_block,
                       temporal_laplacian)
from .exceptions import ConvergenceError, ValidationError
from .network import TemporalNetwork

logger = logging.getLogger(__name__)

SPATIAL, TEMPORAL, UNCLASSIFIED = "spatial", "temporal", "unclassified"

DENSE_THRESHOLD = 2000
DEFAULT_BRACKET = (1e-3, 1e3)


@dataclass(frozen=True, eq=False)
class EigenSet:
    """Ascending eigenpairs with per-vector space/time labels."""

    values: np.ndarray
    vectors: np.ndarray
    labels: tuple
    a: float = None

    def __len__(self):
        return self.values.size

    def select(self, label):
        idx = [i for i, lab in enumerate(self.labels) if lab == label]
        return EigenSet(self.values[idx], self.vectors[:, idx],
                        tuple(self.labels[i] for i in idx), self.a)

    def residuals(self, L):
        M = L.matrix if isinstance(L, SupraMatrix) else L
        R = M @ self.vectors - self.vectors * self.values
        return np.linalg.norm(R, axis=0)


def fix_signs(V, rtol=1e-10):
    """Flip columns so the largest-magnitude entry is positive (ties: lowest index)."""
    V = np.array(V, dtype=np.float64, copy=True)
    if V.ndim == 1:
        return fix_signs(V[:, None], rtol)[:, 0]
    mag = np.abs(V)
    for j in range(V.shape[1]):
        top = mag[:, j].max()
        if top == 0:
            continue
        i = int(np.flatnonzero(mag[:, j] >= top * (1 - rtol))[0])
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return V


def _as_operator(L):
    if isinstance(L, SupraMatrix):
        return L.matrix
    return L


def _norm_estimate(M):
    if isinstance(M, spla.LinearOperator):
        return None
    if sp.issparse(M):
        return float(abs(M).sum(axis=1).max()) if M.nnz else 0.0
    return float(np.abs(M).sum(axis=1).max()) if M.size else 0.0


def _smallest(M, k, tol=1e-9, dense_threshold=DENSE_THRESHOLD, max_iter=None):
    n = M.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"k must lie in [1, {n}], got {k}")
    if n <= dense_threshold or k >= n - 1:
        if isinstance(M, spla.LinearOperator):
            M = M @ np.eye(n)
        A = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=np.float64)
        A = 0.5 * (A + A.T)
        w, V = la.eigh(A, subset_by_index=[0, k - 1], driver="evr")
    else:
        v0 = np.ones(n) / np.sqrt(n) + 1e-3 * np.cos(np.arange(n))
        try:
            if isinstance(M, spla.LinearOperator):
                w, V = spla.eigsh(M, k=k, which="SA", v0=v0, maxiter=max_iter, tol=tol * 1e-3)
            else:
                w, V = spla.eigsh(sp.csc_matrix(M), k=k, sigma=-1e-8, which="LM", v0=v0,
                                  maxiter=max_iter, tol=tol * 1e-3)
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError(f"Lanczos did not converge: {exc}") from exc
        order = np.argsort(w)
        w, V = w[order], V[:, order]
        # full reorthogonalisation of the returned basis
        V, _ = np.linalg.qr(V)
    scale = _norm_estimate(M)
    if scale is not None:
        R = M @ V - V * w
        res = np.linalg.norm(R, axis=0)
        bound = tol * max(1.0, scale)
        if np.any(res > bound):
            raise ConvergenceError(
                f"eigenpair residual {res.max():.3g} exceeds {bound:.3g}")
    return w, fix_signs(V)


def smallest_eigenpairs(L, k, tol=1e-9, dense_threshold=DENSE_THRESHOLD, max_iter=None):
    """The ``k`` smallest eigenpairs of a symmetric matrix, ascending.

    Dense tridiagonalisation below ``dense_threshold``; shift-invert Lanczos
    (shift ``-1e-8``) above it. Residuals are checked against
    ``tol * max(1, ||L||_inf)``.
    """
    a = L.a if isinstance(L, SupraMatrix) else None
    w, V = _smallest(_as_operator(L), k, tol, dense_threshold, max_iter)
    return EigenSet(w, V, (UNCLASSIFIED,) * k, a)


# --------------------------------------------------------------------------
# multiplex: temporal lift subspace


def incidence_spectrum(W):
    """Graph Laplacian spectrum from the weighted incidence matrix.

    ``L = G^T G`` where ``G`` has one row ``sqrt(w_xy) (e_x - e_y)`` per
    edge, so the eigenvalues are the squared singular values of ``G``. A
    small eigenvalue ``l`` then carries an absolute error of order
    ``eps * sqrt(l * l_max)`` rather than ``eps * l_max``, which matters once
    a large coupling strength inflates the norm. Dense; for modest sizes.

    Parameters
    ----------
    W : SupraMatrix, sparse matrix or ndarray
        Symmetric nonnegative weights.

    Returns
    -------
    EigenSet
        Ascending eigenvalues with orthonormal eigenvectors (signs fixed).
    """
    M = W.matrix if isinstance(W, SupraMatrix) else W
    A = sp.triu(sp.csr_matrix(M), k=1).tocoo()
    n = A.shape[0]
    if np.any(A.data < 0):
        raise ValidationError("weights must be nonnegative")
    G = np.zeros((A.nnz, n))
    rows = np.arange(A.nnz)
    root = np.sqrt(A.data)
    G[rows, A.row] = root
    G[rows, A.col] = -root
    _, sv, Vt = la.svd(G, full_matrices=True, lapack_driver="gesvd")
    values = np.zeros(n)
    values[: sv.size] = sv ** 2
    order = np.argsort(values, kind="stable")
    V = fix_signs(Vt.T[:, order])
    return EigenSet(values[order], V, (UNCLASSIFIED,) * n, getattr(W, "a", None))


def temporal_lift_basis(N, T):
    """Orthonormal basis ``f'_k kron 1_N / sqrt(N)`` (k = 2..T) of chain eigenvectors."""
    if T < 2:
        return np.zeros((N * T, 0))
    from .network import chain_weights
    _, G = np.linalg.eigh(graph_laplacian(chain_weights(T)))
    G = fix_signs(G[:, 1:])
    return np.kron(G, np.ones((N, 1))) / np.sqrt(N)


def _temporal_fraction(V, N, T):
    """Squared norm of each column's component in the temporal-lift subspace."""
    V = np.asarray(V)
    S = V.reshape(T, N, -1).sum(axis=1)  # slice sums, T x m
    S = S - S.mean(axis=0, keepdims=True)
    return (S ** 2).sum(axis=0) / N


def _eigen_clusters(values, rtol):
    groups, start = [], 0
    for i in range(1, values.size + 1):
        if i == values.size or values[i] - values[i - 1] > rtol * max(1.0, abs(values[i])):
            groups.append(np.arange(start, i))
            start = i
    return groups


def classify_multiplex(es: EigenSet, N, T, tau=1e-8, degeneracy_rtol=1e-8):
    """Label each eigenvector spatial, temporal or unclassified.

    Degenerate eigenspaces are first rotated so that each basis vector lies
    as far as possible inside or outside the temporal-lift subspace. The
    constant vector is spatial by convention.
    """
    n = es.vectors.shape[0]
    if n != N * T:
        raise ValidationError(f"vector length {n} does not match N*T = {N * T}")
    P = temporal_lift_basis(N, T)
    V = np.array(es.vectors, copy=True)
    labels = [UNCLASSIFIED] * len(es)
    for g in _eigen_clusters(es.values, degeneracy_rtol):
        U = V[:, g]
        if g.size > 1 and P.shape[1]:
            _, _, Zt = np.linalg.svd(P.T @ U)
            U = U @ Zt.T
            V[:, g] = fix_signs(U)
        q = _temporal_fraction(V[:, g], N, T) / np.maximum((V[:, g] ** 2).sum(axis=0), 1e-300)
        for j, qj in zip(g, q):
            if qj <= tau:
                labels[j] = SPATIAL
            elif qj >= 1 - tau:
                labels[j] = TEMPORAL
    if any(lab == UNCLASSIFIED for lab in labels):
        warnings.warn("some eigenvectors could not be classified as spatial or temporal",
                      RuntimeWarning, stacklevel=2)
    return EigenSet(es.values, V, tuple(labels), es.a)


class _MultiplexSplit:
    """Precomputed spatial/temporal pieces of a multiplex network."""

    def __init__(self, net: TemporalNetwork, dense_threshold=DENSE_THRESHOLD):
        net.require_multiplex("spatial/temporal splitting")
        self.net = net
        self.N, self.T = net.N, net.T
        self.n = net.N * net.T
        self.dense = self.n <= dense_threshold
        self.dense_threshold = dense_threshold
        self.Ls = graph_laplacian(spatial_block(net))
        self.Lt = graph_laplacian(multiplex_temporal_block(net))
        self.sigma = np.linalg.eigvalsh(temporal_laplacian(net))
        LD = dynamic_laplacian(net)
        self.lamD = np.linalg.eigvalsh(LD)
        # Gershgorin bound on ||L(a)||: 2 * (spatial + a^2 temporal max degree)
        self.dmax = float(np.asarray(abs(self.Ls).sum(axis=1)).max()) / 2 if self.Ls.nnz else 0.0
        self.tmax = float(np.asarray(abs(self.Lt).sum(axis=1)).max()) / 2 if self.Lt.nnz else 0.0
        if self.dense:
            self.Ls_d = self.Ls.toarray()
            self.Lt_d = self.Lt.toarray()
            if self.T > 1:
                Pi = np.eye(self.T) - 1.0 / self.T
                self.proj = np.kron(Pi, np.full((self.N, self.N), 1.0 / self.N))
            else:
                self.proj = np.zeros((self.n, self.n))

    def temporal_values(self, a):
        return a * a * self.sigma[1:]

    def shift(self, a):
        return 2.0 * (self.dmax + a * a * self.tmax) + 1.0

    def deflated(self, a):
        """``L(a) + c P P^T`` with ``c > ||L(a)||``: temporal modes move above every spatial one."""
        c = self.shift(a)
        if self.dense:
            return self.Ls_d + a * a * self.Lt_d + c * self.proj
        N, T = self.N, self.T
        Lmat = (self.Ls + a * a * self.Lt).tocsr()

        def mv(f):
            f = np.asarray(f).reshape(-1)
            S = f.reshape(T, N).sum(axis=1)
            S = S - S.mean()
            return Lmat @ f + c * np.repeat(S / N, N)

        return spla.LinearOperator((self.n, self.n), matvec=mv, dtype=np.float64)

    def spatial_pairs(self, a, k, tol=1e-9):
        w, V = _smallest(self.deflated(a), k, tol=tol, dense_threshold=self.dense_threshold)
        return w, V


def spatial_eigenpairs(net: TemporalNetwork, a, k, tol=1e-9, dense_threshold=DENSE_THRESHOLD):
    """The ``k`` smallest spatial eigenpairs of the multiplex ``L(a)``."""
    split = _MultiplexSplit(net, dense_threshold)
    k = min(k, split.n - split.T + 1)
    w, V = split.spatial_pairs(a, k, tol)
    return EigenSet(w, V, (SPATIAL,) * k, float(a))


def critical_a_multiplex(net: TemporalNetwork, bracket=DEFAULT_BRACKET, rtol=1e-6,
                         max_iter=60, max_expand=8, dense_threshold=DENSE_THRESHOLD):
    """Smallest ``a`` at which the leading nontrivial spatial eigenvalue meets ``a^2 sigma_2``.

    ``lambda_spat_2(a) / a^2`` is nonincreasing in ``a``, so the sign of
    ``lambda_spat_2(a) / a^2 - sigma_2`` is monotone and bisection (on
    ``log a``) finds the crossing.
    """
    split = _MultiplexSplit(net, dense_threshold)
    if split.T < 2:
        raise ValidationError("a critical strength needs at least two slices")
    sigma2 = split.sigma[1]
    if sigma2 <= 1e-12 * max(1.0, split.sigma[-1]):
        raise ValidationError("the temporal graph is disconnected; no temporal eigenvalue grows")
    if split.lamD[1] <= 1e-12 * max(1.0, split.dmax) or split.n - split.T + 1 < 2:
        return 0.0

    def excess(a):
        w, _ = split.spatial_pairs(a, 2)
        return w[1] / (a * a) - sigma2

    lo, hi = map(float, bracket)
    if not 0 < lo < hi:
        raise ValidationError("bracket must satisfy 0 < a_lo < a_hi")
    for _ in range(max_expand):
        if excess(lo) > 0:
            break
        lo /= 10.0
    else:
        raise ConvergenceError("lower bracket end never exceeds the temporal eigenvalue")
    for _ in range(max_expand):
        if excess(hi) <= 0:
            break
        hi *= 10.0
    else:
        raise ConvergenceError("upper bracket end never falls below the temporal eigenvalue")
    for _ in range(max_iter):
        if hi / lo - 1.0 <= rtol:
            break
        mid = np.sqrt(lo * hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    else:
        raise ConvergenceError("bisection for the critical strength did not converge")
    logger.debug("critical a (multiplex) = %.8g", hi)
    return hi


# --------------------------------------------------------------------------
# non-multiplex


@dataclass(frozen=True, eq=False)
class SpatialSelection:
    """Outcome of the temporal-overlap test on non-multiplex eigenvectors."""

    indices: np.ndarray
    scores: np.ndarray
    complete: bool


def temporal_overlap_scores(es: EigenSet, net: TemporalNetwork):
    """``max_j |<I(F_k), f'_j kron 1_N>|`` for every eigenvector (unit-normalised)."""
    imap = net.index_map()
    N, T = net.N, net.T
    from .network import chain_weights
    _, G = np.linalg.eigh(graph_laplacian(chain_weights(T)))
    lifts = np.kron(G, np.ones((N, 1))) / np.sqrt(N)
    E = imap.embed(es.vectors)
    E = E / np.maximum(np.linalg.norm(E, axis=0), 1e-300)
    return np.abs(lifts.T @ E).max(axis=0)


def identify_spatial_nonmultiplex(es: EigenSet, net: TemporalNetwork, R, tau_temp=0.1):
    """Pick the leading ``R`` eigenvectors whose temporal overlap is below ``tau_temp``.

    The trivial (constant) eigenvector is never selected. Selected indices
    come in ascending eigenvalue order.
    """
    scores = temporal_overlap_scores(es, net)
    n = es.vectors.shape[0]
    const = np.abs(es.vectors.sum(axis=0)) / np.sqrt(n)
    eligible = [k for k in range(len(es)) if scores[k] < tau_temp and const[k] < 1 - 1e-8]
    chosen = np.array(eligible[:R], dtype=np.int64)
    complete = chosen.size == R
    if not complete:
        warnings.warn(f"only {chosen.size} of {R} requested spatial eigenvectors found",
                      RuntimeWarning, stacklevel=2)
    return SpatialSelection(chosen, scores, complete)


def rayleigh_balance(net: TemporalNetwork, a, dense_threshold=DENSE_THRESHOLD):
    """``g(a) = <L_spat F2, F2> - a^2 <L_temp F2, F2>`` and its temporal term."""
    W = build_nonmultiplex_adjacency(net, a)
    L = assemble_laplacian(W)
    es = smallest_eigenpairs(L, 2, dense_threshold=dense_threshold)
    F = es.vectors[:, 1]
    sp_term = float(F @ (L.spatial @ F))
    tm_term = a * a * float(F @ (L.temporal @ F))
    return sp_term - tm_term, tm_term


def critical_a_nonmultiplex(net: TemporalNetwork, bracket=DEFAULT_BRACKET, rtol=1e-6,
                            gtol=1e-6, max_iter=100, max_expand=8,
                            dense_threshold=DENSE_THRESHOLD):
    """Strength at which the second eigenvector's Rayleigh quotient splits evenly.

    Returns 0 when there are no spatial edges. Bisection on ``log a`` stops
    once the bracket is ``rtol``-narrow and ``|g| <= gtol * a^2 <L_temp F, F>``
    (or after ``max_iter`` steps, returning the best point seen).
    """
    if all(np.count_nonzero(W) == 0 for W in net.layers):
        return 0.0
    if net.T < 2 or nonmultiplex_temporal_block(net).nnz == 0:
        raise ValidationError("no temporal edges; the Rayleigh balance is undefined")

    def g(a):
        return rayleigh_balance(net, a, dense_threshold)

    lo, hi = map(float, bracket)
    if not 0 < lo < hi:
        raise ValidationError("bracket must satisfy 0 < a_lo < a_hi")
    for _ in range(max_expand):
        if g(lo)[0] < 0:
            break
        lo /= 10.0
    else:
        raise ConvergenceError("Rayleigh balance is positive throughout the bracket")
    for _ in range(max_expand):
        if g(hi)[0] >= 0:
            break
        hi *= 10.0
    else:
        raise ConvergenceError("Rayleigh balance never changes sign")
    best_a, best_r = hi, np.inf
    for _ in range(max_iter):
        mid = np.sqrt(lo * hi)
        val, tm = g(mid)
        r = abs(val) / max(tm, 1e-300)
        if r < best_r:
            best_a, best_r = mid, r
        if val < 0:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1.0 <= rtol and r <= gtol:
            return mid
    logger.debug("Rayleigh balance residual %.3g at a = %.8g", best_r, best_a)
    return best_a
