"""Locality weights: squared pairwise distances between sample columns.

Small weights mean similar samples.  The solver uses these weights to push
coefficients between dissimilar samples toward zero.
"""

import warnings

import numpy as np

from .prox import _as_matrix


def normalize_columns(X, allow_zero=False):
    """Scale every column of X to unit l2 norm.

    Zero columns raise ValueError unless allow_zero is set, in which case
    they are kept as zeros and a RuntimeWarning is issued.
    """
    X = _as_matrix(X, "X")
    norms = np.linalg.norm(X, axis=0)
    zero = norms == 0.0
    if zero.any():
        if not allow_zero:
            raise ValueError(
                f"columns {np.flatnonzero(zero).tolist()} have zero norm; "
                "pass allow_zero=True to keep them"
            )
        warnings.warn(
            f"{int(zero.sum())} zero-norm column(s) left as zeros", RuntimeWarning
        )
    return X / np.where(zero, 1.0, norms)


def pairwise_sq_dist(X):
    """Squared euclidean distances between all column pairs of X.

    Returns an n x n symmetric matrix with exact zeros on the diagonal and
    no negative entries (floating-point negativity is clamped).
    """
    X = _as_matrix(X, "X")
    n = X.shape[1]
    if n < 2:
        raise ValueError(f"need at least 2 sample columns, got {n}")
    sq = np.sum(X * X, axis=0)
    R = sq[:, None] + sq[None, :] - 2.0 * (X.T @ X)
    np.maximum(R, 0.0, out=R)
    R = 0.5 * (R + R.T)
    np.fill_diagonal(R, 0.0)
    return R


def validate_locality_weights(R, atol=1e-10):
    """Check that R is a valid sample-distance weight matrix.

    Requires a square, finite, entrywise nonnegative matrix, symmetric to
    atol, with zero diagonal.  Raises ValueError otherwise.
    """
    R = _as_matrix(R, "R")
    n, m = R.shape
    if n != m:
        raise ValueError(f"locality weights must be square, got {R.shape}")
    if np.any(R < 0.0):
        raise ValueError("locality weights must be entrywise >= 0")
    if not np.allclose(R, R.T, rtol=0.0, atol=atol):
        raise ValueError("locality weights must be symmetric")
    if np.any(np.abs(np.diag(R)) > atol):
        raise ValueError("locality weights must have a zero diagonal")
    return R
