"""Sparse eigenbasis approximation.

Rotates an orthonormal bundle ``V`` (m x r) towards ``r`` sparse vectors by
alternating minimisation of ``0.5 ||V - S Q||_F^2 + mu ||S||_1`` over
unit-norm columns ``S`` and orthogonal ``Q``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ValidationError
from .validation import check_orthonormal_columns


@dataclass(frozen=True, eq=False)
class SebaResult:
    """Output of :func:`seba`.

    Attributes
    ----------
    S : ndarray of shape (m, r)
        Post-processed sparse vectors: nonnegative, each with maximum 1.
    Q : ndarray of shape (r, r)
        Orthogonal rotation with ``V ~ S_unit @ Q``.
    objective : float
        Final value of the penalised objective.
    iterations : int
    objectives : ndarray
        Objective after every sweep (nonincreasing).
    S_unit : ndarray of shape (m, r)
        Sign-fixed unit-norm minimiser before clipping and rescaling.
    mu : float
    """

    S: np.ndarray
    Q: np.ndarray
    objective: float
    iterations: int
    objectives: np.ndarray
    S_unit: np.ndarray
    mu: float


def default_mu(m):
    return 0.99 / np.sqrt(m)


def _polar(M):
    U, _, Wt = np.linalg.svd(M)
    return U @ Wt


def _sparse_step(Z, mu):
    """Exact minimiser of ``0.5||Z - S||^2 + mu||S||_1`` over unit-norm columns."""
    S = np.sign(Z) * np.maximum(np.abs(Z) - mu, 0.0)
    norms = np.linalg.norm(S, axis=0)
    for j in np.flatnonzero(norms == 0):
        i = int(np.argmax(np.abs(Z[:, j])))
        S[i, j] = 1.0 if Z[i, j] >= 0 else -1.0
        norms[j] = 1.0
    return S / norms


def _objective(V, S, Q, mu):
    return 0.5 * float(np.sum((V - S @ Q) ** 2)) + mu * float(np.abs(S).sum())


def initial_rotation(V):
    """Polar factor of the ``r`` pivot rows of a column-pivoted QR of ``V^T``."""
    r = V.shape[1]
    _, _, piv = la.qr(V.T, pivoting=True, mode="economic")
    return _polar(V[np.sort(piv[:r])])


def seba(V, mu=None, tol=1e-12, max_iter=5000):
    """Sparse basis for the span of ``V``.

    Parameters
    ----------
    V : ndarray of shape (m, r)
        Orthonormal columns.
    mu : float, optional
        Sparsity penalty; defaults to ``0.99 / sqrt(m)``.
    tol : float
        Stop once the relative objective change is at most ``tol``.
    max_iter : int

    Returns
    -------
    SebaResult
    """
    V = check_orthonormal_columns(V)
    m, r = V.shape
    if r < 1:
        raise ValidationError("SEBA needs at least one input vector")
    mu = default_mu(m) if mu is None else float(mu)
    if not np.isfinite(mu) or mu < 0:
        raise ValidationError(f"mu must be a nonnegative number, got {mu}")

    Q = initial_rotation(V)
    history = []
    prev = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        S = _sparse_step(V @ Q.T, mu)
        Q = _polar(S.T @ V)
        obj = _objective(V, S, Q, mu)
        history.append(obj)
        if np.isfinite(prev) and abs(prev - obj) <= tol * max(abs(prev), 1e-300):
            break
        if obj == 0.0:
            break
        prev = obj

    # sign fix, then order columns by position of their largest entry
    mag = np.abs(S)
    top = mag.max(axis=0)
    lead = np.array([np.flatnonzero(mag[:, j] >= top[j] * (1 - 1e-10))[0] for j in range(r)])
    signs = np.where(S[lead, np.arange(r)] < 0, -1.0, 1.0)
    S = S * signs
    Q = Q * signs[:, None]
    order = np.lexsort((np.arange(r), lead))
    S, Q = S[:, order], Q[order]

    out = np.clip(S, 0.0, None)
    peak = out.max(axis=0)
    out = out / np.where(peak > 0, peak, 1.0)
    return SebaResult(S=out, Q=Q, objective=history[-1], iterations=it,
                      objectives=np.array(history), S_unit=S, mu=mu)


class SEBA(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`seba`.

    ``fit`` takes an orthonormal bundle whose rows are vertices and whose
    columns are vectors; ``transform`` applies the learned rotation and the
    sparsifying step to another bundle of the same width.

    Parameters
    ----------
    mu : float, default=None
        Sparsity penalty; ``None`` uses ``0.99 / sqrt(n_samples)``.
    tol : float, default=1e-12
    max_iter : int, default=5000

    Attributes
    ----------
    rotation_ : ndarray of shape (n_features, n_features)
    mu_ : float
    objective_ : float
    n_iter_ : int
    """

    def __init__(self, mu=None, tol=1e-12, max_iter=5000):
        self.mu = mu
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self._result = seba(X, mu=self.mu, tol=self.tol, max_iter=self.max_iter)
        self.rotation_ = self._result.Q
        self.mu_ = self._result.mu
        self.objective_ = self._result.objective
        self.n_iter_ = self._result.iterations
        self.n_features_in_ = X.shape[1]
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).result_.S

    @property
    def result_(self):
        check_is_fitted(self, "rotation_")
        return self._result

    def transform(self, X):
        check_is_fitted(self, "rotation_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(
                f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        S = _sparse_step(X @ self.rotation_.T, self.mu_)
        S = np.clip(S, 0.0, None)
        peak = S.max(axis=0)
        return S / np.where(peak > 0, peak, 1.0)
