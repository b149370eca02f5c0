"""Input validation helpers shared by the estimators and the functional API."""

import numbers

import numpy as np
import scipy.sparse as sp

from .exceptions import ValidationError

SYMMETRY_ATOL = 1e-12


def check_weight_matrix(W, name="W", allow_sparse=False):
    """Validate a symmetric, nonnegative weight matrix with zero diagonal.

    Returns a float64 ndarray (or CSR matrix when ``allow_sparse`` and the
    input is sparse).
    """
    if sp.issparse(W):
        W = sp.csr_matrix(W, dtype=np.float64)
        if not allow_sparse:
            W = W.toarray()
    else:
        W = np.asarray(W, dtype=np.float64)
        if W.ndim == 0 and W.size == 1:
            W = W.reshape(1, 1)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValidationError(f"{name} must be a square matrix, got shape {W.shape}")
    if sp.issparse(W):
        data = W.data
        diag = W.diagonal()
        asym = abs(W - W.T).max() if W.nnz else 0.0
    else:
        data = W
        diag = np.diag(W)
        asym = np.max(np.abs(W - W.T)) if W.size else 0.0
    if not np.all(np.isfinite(data)):
        raise ValidationError(f"{name} contains non-finite entries")
    if np.any(data < 0):
        raise ValidationError(f"{name} has negative weights")
    if asym > SYMMETRY_ATOL * max(1.0, float(np.max(np.abs(data), initial=0.0))):
        raise ValidationError(f"{name} is not symmetric (max asymmetry {asym:.3g})")
    if np.any(diag != 0):
        raise ValidationError(f"{name} has a nonzero diagonal (self-loops are rejected)")
    return W


def check_strength(a, name="a"):
    if not isinstance(a, numbers.Real) or not np.isfinite(a) or a < 0:
        raise ValidationError(f"{name} must be a finite nonnegative scalar, got {a!r}")
    return float(a)


def check_orthonormal_columns(V, atol=1e-8, name="V"):
    V = np.asarray(V, dtype=np.float64)
    if V.ndim == 1:
        V = V[:, None]
    if V.ndim != 2 or V.shape[1] < 1:
        raise ValidationError(f"{name} must be a 2-d array with at least one column")
    gram = V.T @ V
    err = np.max(np.abs(gram - np.eye(V.shape[1])))
    if err > atol:
        raise ValidationError(f"{name} columns are not orthonormal (max deviation {err:.3g})")
    return V


def check_vertex_subset(X, n, name="X"):
    """Return ``X`` as a sorted unique int array of indices in ``[0, n)``."""
    idx = np.unique(np.asarray(list(X) if not isinstance(X, np.ndarray) else X, dtype=np.int64))
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise ValidationError(f"{name} contains vertices outside [0, {n})")
    return idx
