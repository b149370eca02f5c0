"""Spacetime spectral partitioning: eigenvectors to SEBA vectors to packings.

:func:`run_multiplex` handles networks where every vertex is present in every
slice; :func:`run_nonmultiplex` handles varying vertex sets. Both return a
:class:`PartitionRun`. :class:`SpacetimeSpectralClustering` wraps them as a
scikit-learn style clusterer.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from .assembly import assemble_laplacian, build_multiplex_adjacency, build_nonmultiplex_adjacency
from .cheeger import Packing, cheeger_ratio
from .exceptions import ValidationError
from .network import TemporalNetwork
from .seba import seba
from .spectral import (_MultiplexSplit, critical_a_multiplex, critical_a_nonmultiplex,
                       fix_signs, identify_spatial_nonmultiplex, smallest_eigenpairs)

logger = logging.getLogger(__name__)

OMEGA = -1
TIE_RTOL = 0.05
GAP_EPS = 1e-12


# --------------------------------------------------------------------------
# building blocks


def companion_vectors(F, N, T):
    """Slice-wise l2 norms of each column, repeated over the slice."""
    F = np.asarray(F, dtype=np.float64)
    squeeze = F.ndim == 1
    F = F.reshape(T * N, -1)
    norms = np.linalg.norm(F.reshape(T, N, -1), axis=1)  # T x r
    out = np.repeat(norms, N, axis=0)
    return out[:, 0] if squeeze else out


def interleave(F, G):
    """Columns ``[F_0, G_0, F_1, G_1, ...]``."""
    F = np.asarray(F)
    G = np.asarray(G)
    out = np.empty((F.shape[0], 2 * F.shape[1]))
    out[:, 0::2] = F
    out[:, 1::2] = G
    return out


def orthonormal_bundle(B, rtol=1e-8):
    """Orthonormal basis of the column span; numerically dependent directions are dropped."""
    U, s, _ = np.linalg.svd(np.asarray(B, dtype=np.float64), full_matrices=False)
    if s.size == 0 or s[0] == 0:
        raise ValidationError("empty vector bundle")
    keep = s > rtol * s[0]
    if not keep.all():
        logger.info("dropping %d dependent bundle directions", int((~keep).sum()))
    return fix_signs(U[:, keep])


def support_ratios(S, W, theta=0.0):
    """Unnormalised Cheeger ratio of every column's support ``S > theta``."""
    out = np.empty(S.shape[1])
    for j in range(S.shape[1]):
        X = np.flatnonzero(S[:, j] > theta)
        out[j] = cheeger_ratio(X, W) if X.size else np.inf
    return out


@dataclass(frozen=True)
class RChoice:
    R: int
    gaps: dict
    mean_ratios: dict
    tied: tuple


def spectral_gaps(values):
    """Relative gaps ``(l_{k+1} - l_k) / max(l_k, eps)`` for ``k >= 2`` (1-based).

    Keyed by the number of nontrivial vectors ``R`` preceding the gap, so
    ``gaps[R]`` is the gap just above the ``(R+1)``-th eigenvalue.
    """
    v = np.asarray(values, dtype=np.float64)
    return {R: float((v[R + 1] - v[R]) / max(v[R], GAP_EPS)) for R in range(1, v.size - 1)}


def select_R(spatial_values, mean_ratios, tie_rtol=TIE_RTOL):
    """Choose the number of eigenvectors from mean Cheeger ratios and spectral gaps.

    The minimiser of ``mean_ratios`` wins outright unless other candidates
    lie within ``tie_rtol`` (relative) of it; among such ties the candidate
    followed by the largest relative spectral gap is preferred (smaller R on
    equal gaps). With no informative gap the plain minimiser is returned.
    """
    if not mean_ratios:
        raise ValidationError("no candidate R values")
    Rs = sorted(mean_ratios)
    vals = np.array([mean_ratios[R] for R in Rs])
    best = int(np.argmin(vals))
    floor = vals[best]
    tied = tuple(R for R, v in zip(Rs, vals) if v <= floor + tie_rtol * abs(floor))
    gaps = spectral_gaps(spatial_values)
    R = Rs[best]
    if len(tied) > 1:
        g = np.array([gaps.get(r, -np.inf) for r in tied])
        finite = g[np.isfinite(g)]
        if finite.size and finite.max() - finite.min() > 1e-9 * max(1.0, abs(finite.max())):
            R = tied[int(np.argmax(g))]
    return RChoice(R=R, gaps=gaps, mean_ratios=dict(mean_ratios), tied=tied)


def _slice_groups(index_map):
    return [index_map.slice_indices(t) for t in range(index_map.T)]


def detect_spurious(S, index_map, W, kappa=3.0, fibre_rtol=1e-6, theta=0.0):
    """Flag columns that are constant on every slice they touch, or have outlying ratios.

    Returns
    -------
    flags : ndarray of bool
    reasons : list of str or None
    ratios : ndarray
        Cheeger ratio of each column's support.
    """
    S = np.asarray(S, dtype=np.float64)
    r = S.shape[1]
    groups = _slice_groups(index_map)
    ratios = support_ratios(S, W, theta)
    flags = np.zeros(r, dtype=bool)
    reasons = [None] * r
    for j in range(r):
        flat = True
        touched = False
        for g in groups:
            v = S[g, j]
            if not np.any(v > theta):
                continue
            touched = True
            if np.var(v) > fibre_rtol * np.mean(v * v):
                flat = False
                break
        if touched and flat:
            flags[j] = True
            reasons[j] = "constant on slices"
    med = float(np.median(ratios[np.isfinite(ratios)])) if np.isfinite(ratios).any() else 0.0
    for j in range(r):
        if not flags[j] and ratios[j] > kappa * med:
            flags[j] = True
            reasons[j] = "cut ratio outlier"
    return flags, reasons, ratios


def assign_packing(S, keep=None, theta=0.0):
    """Packing from the positive supports of the kept columns.

    A vertex supported by several columns goes to the largest value (lowest
    column index on ties); vertices supported by none form the remainder.
    Columns left with no vertices do not produce an element.
    """
    S = np.asarray(S, dtype=np.float64)
    n, r = S.shape
    keep = np.ones(r, dtype=bool) if keep is None else np.asarray(keep, dtype=bool)
    cols = np.flatnonzero(keep)
    if cols.size == 0:
        warnings.warn("every SEBA vector was rejected; the packing is empty", RuntimeWarning,
                      stacklevel=2)
        return Packing((), np.arange(n), n), np.full(n, -1)
    sub = S[:, cols]
    owner = np.argmax(sub, axis=1)
    supported = sub[np.arange(n), owner] > theta
    labels = np.where(supported, owner, -1)
    elements = []
    source = []
    for k in range(cols.size):
        X = np.flatnonzero(labels == k)
        if X.size:
            elements.append(X)
            source.append(int(cols[k]))
    return Packing(tuple(elements), np.flatnonzero(labels < 0), n), np.array(source)


# --------------------------------------------------------------------------
# pipeline


@dataclass(frozen=True, eq=False)
class PartitionRun:
    """Everything produced by one partitioning run.

    ``seba_vectors`` are the processed SEBA columns for the chosen ``R``;
    ``element_columns[k]`` is the column that produced ``packing.elements[k]``.
    ``diagnostics`` holds eigenvalues, gaps, mean ratios per candidate R and
    slice-norm tables.
    """

    a: float
    R: int
    mode: str
    index_map: object
    seba_inputs: np.ndarray
    seba_vectors: np.ndarray
    column_ratios: np.ndarray
    spurious: np.ndarray
    spurious_reasons: list
    packing: Packing
    element_columns: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def labels(self):
        return self.packing.labels()

    @property
    def K(self):
        return self.packing.K


def _candidate_Rs(R, max_R, available):
    if R == "auto":
        hi = min(max_R, available)
        if hi < 1:
            raise ValidationError("not enough nontrivial spatial eigenvectors")
        return list(range(1, hi + 1))
    R = int(R)
    if not 1 <= R <= available:
        raise ValidationError(f"R={R} exceeds the {available} available spatial eigenvectors")
    return [R]


def _trivial_run(net, a, mode, reason):
    imap = net.index_map()
    n = imap.n
    warnings.warn(f"no spatial structure ({reason}); returning the single-element packing",
                  RuntimeWarning, stacklevel=3)
    S = np.ones((n, 1))
    return PartitionRun(a=a, R=0, mode=mode, index_map=imap, seba_inputs=S / np.sqrt(n),
                        seba_vectors=S, column_ratios=np.zeros(1), spurious=np.zeros(1, bool),
                        spurious_reasons=[None], packing=Packing((np.arange(n),), [], n),
                        element_columns=np.zeros(1, dtype=int),
                        diagnostics={"reason": reason})


def _evaluate(bundles, W, mu, seba_tol, seba_max_iter):
    """SEBA on every candidate bundle; returns per-R results and mean ratios."""
    results, means = {}, {}
    for R, B in bundles.items():
        res = seba(B, mu=mu, tol=seba_tol, max_iter=seba_max_iter)
        ratios = support_ratios(res.S, W)
        results[R] = (B, res)
        means[R] = float(np.mean(ratios))
    return results, means


def _finish(net, a, mode, imap, W, values, Rs, results, means, kappa, theta, fibre_rtol,
            extra):
    choice = select_R(values, means) if len(Rs) > 1 else RChoice(Rs[0], spectral_gaps(values),
                                                                  means, (Rs[0],))
    B, res = results[choice.R]
    flags, reasons, ratios = detect_spurious(res.S, imap, W, kappa=kappa,
                                             fibre_rtol=fibre_rtol, theta=theta)
    packing, source = assign_packing(res.S, ~flags, theta)
    diag = {"eigenvalues": np.asarray(values), "gaps": choice.gaps,
            "mean_ratios": choice.mean_ratios, "tied_R": choice.tied,
            "seba_objective": res.objective, "seba_iterations": res.iterations}
    diag.update(extra)
    return PartitionRun(a=float(a), R=choice.R, mode=mode, index_map=imap, seba_inputs=B,
                        seba_vectors=res.S, column_ratios=ratios, spurious=flags,
                        spurious_reasons=reasons, packing=packing, element_columns=source,
                        diagnostics=diag)


def run_multiplex(net: TemporalNetwork, a="auto", R="auto", mu=None, max_R=5, kappa=3.0,
                  theta=0.0, fibre_rtol=1e-6, companions=True, bracket=(1e-3, 1e3), seba_tol=1e-12,
                  seba_max_iter=5000, bundle_rtol=1e-8):
    """Partition a multiplex network.

    Parameters
    ----------
    net : TemporalNetwork
        Multiplex network.
    a : float or "auto"
        Temporal coupling strength; ``"auto"`` uses the critical strength.
    R : int or "auto"
        Number of nontrivial spatial eigenvectors; ``"auto"`` tries
        ``1..max_R`` and picks by mean Cheeger ratio and spectral gap.
    mu : float, optional
        SEBA penalty.
    kappa : float
        Ratio-outlier factor for spurious columns.
    fibre_rtol : float
        A column whose within-slice variance is at most ``fibre_rtol`` times
        its within-slice mean square, on every slice it touches, is spurious.
    theta : float
        Support threshold (strict).
    companions : bool
        Append slice-norm companion vectors to the SEBA input.

    Returns
    -------
    PartitionRun
    """
    net.require_multiplex("run_multiplex")
    N, T = net.N, net.T
    if a == "auto":
        a = critical_a_multiplex(net, bracket=bracket) if T > 1 else 0.0
    a = float(a)
    split = _MultiplexSplit(net)
    W = build_multiplex_adjacency(net, a)
    available = N * T - (T - 1) - 1
    kmax = min((max_R if R == "auto" else int(R)) + 2, available + 1)
    w, V = split.spatial_pairs(a, kmax)
    Rs = _candidate_Rs(R, max_R, kmax - 1)
    bundles = {}
    for r in Rs:
        F = V[:, 1:r + 1]
        B = interleave(F, companion_vectors(F, N, T)) if companions else F
        bundles[r] = orthonormal_bundle(B, bundle_rtol)
    results, means = _evaluate(bundles, W, mu, seba_tol, seba_max_iter)
    slice_norms = np.linalg.norm(V[:, 1:].reshape(T, N, -1), axis=1).T
    extra = {"spatial_vectors": V, "slice_norms": slice_norms,
             "temporal_eigenvalues": split.temporal_values(a)}
    return _finish(net, a, "multiplex", net.index_map(), W, w, Rs, results, means, kappa,
                   theta, fibre_rtol, extra)


def run_nonmultiplex(net: TemporalNetwork, a="auto", R="auto", mu=None, max_R=5, kappa=3.0,
                     theta=0.0, fibre_rtol=1e-6, tau_temp=0.1, bracket=(1e-3, 1e3), seba_tol=1e-12,
                     seba_max_iter=5000):
    """Partition a network whose vertex sets vary between slices.

    Spatial eigenvectors are those of the full spacetime Laplacian with small
    overlap with every lifted temporal mode (see
    :func:`identify_spatial_nonmultiplex`). SEBA runs on them directly.
    """
    if net.temporal_weights is not None:
        raise ValidationError("the non-multiplex path supports chain coupling only")
    if all(np.count_nonzero(Wt) == 0 for Wt in net.layers):
        return _trivial_run(net, 0.0, "nonmultiplex", "no spatial edges")
    if a == "auto":
        a = critical_a_nonmultiplex(net, bracket=bracket) if net.T > 1 else 0.0
    a = float(a)
    Wa = build_nonmultiplex_adjacency(net, a)
    L = assemble_laplacian(Wa)
    imap = Wa.index_map
    n = imap.n
    want = (max_R if R == "auto" else int(R)) + 1
    k = min(n, 2 * want + net.T + 2)
    while True:
        es = smallest_eigenpairs(L, k)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            sel = identify_spatial_nonmultiplex(es, net, want, tau_temp)
        if sel.complete or k == n:
            break
        k = min(n, 2 * k)
    if sel.indices.size == 0:
        return _trivial_run(net, a, "nonmultiplex", "no spatial eigenvectors")
    if not sel.complete:
        warnings.warn(f"only {sel.indices.size} spatial eigenvectors available",
                      RuntimeWarning, stacklevel=2)
    idx = sel.indices
    values = np.concatenate([[es.values[0]], es.values[idx]])
    Rs = _candidate_Rs(R, max_R, idx.size)
    bundles = {r: es.vectors[:, idx[:r]] for r in Rs}
    results, means = _evaluate(bundles, Wa, mu, seba_tol, seba_max_iter)
    F = imap.embed(es.vectors[:, idx])
    slice_norms = np.linalg.norm(F.reshape(net.T, net.N, -1), axis=1).T
    extra = {"spatial_indices": idx, "overlap_scores": sel.scores,
             "all_eigenvalues": es.values, "spatial_vectors": es.vectors[:, idx],
             "slice_norms": slice_norms}
    return _finish(net, a, "nonmultiplex", imap, Wa, values, Rs, results, means, kappa,
                   theta, fibre_rtol, extra)


def static_bipartition(net: TemporalNetwork):
    """Per-slice Fiedler sign split, labels carried across slices by identity.

    Label 0 is the side holding the largest-magnitude Fiedler entry. Used as
    a baseline against the spacetime packings.
    """
    imap = net.index_map()
    labels = np.empty(imap.n, dtype=np.int64)
    for t in range(net.T):
        Wt = net.layers[t]
        L = np.diag(Wt.sum(axis=1)) - Wt
        g = imap.slice_indices(t)
        if Wt.shape[0] < 2:
            labels[g] = 0
            continue
        _, vecs = np.linalg.eigh(L)
        f = fix_signs(vecs[:, 1])
        labels[g] = np.where(f >= 0, 0, 1)
    return Packing.from_labels(labels)


# --------------------------------------------------------------------------
# transitions


@dataclass(frozen=True)
class TransitionEvent:
    """A split/merge/appearance/disappearance between slices ``t`` and ``t+1``.

    ``t`` is 0-based. ``actor`` and ``targets`` are element indices, with
    ``OMEGA`` (-1) standing for the unclustered remainder. ``shrinking``
    marks a split into the actor and the remainder only, ``growing`` the
    matching merge.
    """

    t: int
    kind: str
    J: int
    actor: int
    targets: tuple
    shrinking: bool = False
    growing: bool = False


def _slice_members(labels, index_map, t):
    g = index_map.slice_indices(t)
    return index_map.vertex_of()[g], labels[g]


def _collection(A, x_next, lab_next, max_J):
    """Elements covering the space nodes ``A`` at the next slice, if they match exactly."""
    pos = dict(zip(x_next.tolist(), lab_next.tolist()))
    if any(x not in pos for x in A):
        return None
    J = sorted({pos[x] for x in A})
    if len(J) > max_J:
        return None
    union = {x for x, lab in pos.items() if lab in J}
    if union != set(A):
        return None
    return tuple(J)


def classify_transitions(packing: Packing, index_map, max_J=4):
    """Detect transitions between consecutive slices.

    For every element (and the remainder) the set of its space nodes at one
    slice is compared with the union of the elements covering them at the
    neighbouring slice. Forward comparisons give splits and appearances;
    backward ones give merges and disappearances. A remainder-only
    collection never counts as an appearance of a cluster.
    """
    labels = packing.labels()
    if labels.size != index_map.n:
        raise ValidationError("packing and index map disagree on the vertex count")
    events = []
    for t in range(index_map.T - 1):
        for direction in ("forward", "backward"):
            src, dst = (t, t + 1) if direction == "forward" else (t + 1, t)
            x_src, l_src = _slice_members(labels, index_map, src)
            x_dst, l_dst = _slice_members(labels, index_map, dst)
            for k in sorted(set(l_src.tolist())):
                A = x_src[l_src == k].tolist()
                coll = _collection(A, x_dst, l_dst, max_J)
                if coll is None:
                    continue
                J = len(coll)
                inside = k in coll
                if k == OMEGA:
                    if J < 2:
                        continue
                    kind = "appearance" if direction == "forward" else "disappearance"
                    events.append(TransitionEvent(t, kind, J, OMEGA, coll))
                elif inside:
                    if J < 2:
                        continue
                    kind = "split" if direction == "forward" else "merge"
                    absorbs = set(coll) == {k, OMEGA}
                    events.append(TransitionEvent(t, kind, J, k, coll,
                                                  shrinking=absorbs and kind == "split",
                                                  growing=absorbs and kind == "merge"))
                else:
                    if coll == (OMEGA,):
                        continue
                    kind = "appearance" if direction == "forward" else "disappearance"
                    events.append(TransitionEvent(t, kind, J, k, coll))
    return events


# --------------------------------------------------------------------------
# estimator


class SpacetimeSpectralClustering(ClusterMixin, BaseEstimator):
    """Spacetime spectral clustering of a temporal network.

    Parameters
    ----------
    a : float or "auto", default="auto"
        Temporal coupling strength.
    n_vectors : int or "auto", default="auto"
        Number ``R`` of nontrivial spatial eigenvectors.
    mu : float, default=None
        SEBA penalty (``None``: ``0.99 / sqrt(n)``).
    multiplex : bool or None, default=None
        Force the multiplex (True) or non-multiplex (False) path; ``None``
        decides from the network.
    max_vectors : int, default=5
    kappa : float, default=3.0
    theta : float, default=0.0
    fibre_rtol : float, default=1e-6
    tau_temp : float, default=0.1
    companions : bool, default=True

    Attributes
    ----------
    run_ : PartitionRun
    labels_ : ndarray of shape (n_spacetime,)
        Element index per spacetime vertex, ``-1`` for unclustered ones.
    a_ : float
    n_vectors_ : int
    packing_ : Packing
    seba_vectors_ : ndarray
    spurious_ : ndarray of bool
    eigenvalues_ : ndarray
    """

    def __init__(self, a="auto", n_vectors="auto", mu=None, multiplex=None, max_vectors=5,
                 kappa=3.0, theta=0.0, fibre_rtol=1e-6, tau_temp=0.1, companions=True):
        self.a = a
        self.n_vectors = n_vectors
        self.mu = mu
        self.multiplex = multiplex
        self.max_vectors = max_vectors
        self.kappa = kappa
        self.theta = theta
        self.fibre_rtol = fibre_rtol
        self.tau_temp = tau_temp
        self.companions = companions

    def fit(self, X, y=None):
        if not isinstance(X, TemporalNetwork):
            raise ValidationError("fit expects a TemporalNetwork")
        multiplex = X.is_multiplex if self.multiplex is None else bool(self.multiplex)
        if multiplex:
            run = run_multiplex(X, a=self.a, R=self.n_vectors, mu=self.mu,
                                max_R=self.max_vectors, kappa=self.kappa, theta=self.theta,
                                fibre_rtol=self.fibre_rtol, companions=self.companions)
        else:
            run = run_nonmultiplex(X, a=self.a, R=self.n_vectors, mu=self.mu,
                                   max_R=self.max_vectors, kappa=self.kappa, theta=self.theta,
                                   fibre_rtol=self.fibre_rtol, tau_temp=self.tau_temp)
        self.run_ = run
        self.labels_ = run.labels
        self.a_ = run.a
        self.n_vectors_ = run.R
        self.packing_ = run.packing
        self.seba_vectors_ = run.seba_vectors
        self.spurious_ = run.spurious
        self.eigenvalues_ = run.diagnostics.get("eigenvalues")
        return self

    def transitions(self, max_J=4):
        """Transition events of the fitted packing."""
        check_is_fitted(self, "run_")
        return classify_transitions(self.packing_, self.run_.index_map, max_J)


