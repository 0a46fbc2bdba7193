"""Closed-form proximal (shrinkage) operators for matrix subproblems.

All operators are pure: inputs are validated, never mutated, and calls are
safe from multiple threads.
"""

import numpy as np

from .errors import NumericalError

# Entries this close to a shrinkage boundary take the zero branch, so
# behaviour at the kink is deterministic.  A zero threshold short-circuits
# to an exact identity.
KINK_TOL = 1e-12


def _as_matrix(M, name):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def _check_threshold(tau, name="tau"):
    tau = float(tau)
    if not np.isfinite(tau) or tau < 0.0:
        raise ValueError(f"{name} must be a finite scalar >= 0, got {tau}")
    return tau


def soft_threshold(x, eps):
    """Scalar shrinkage: x - eps if x > eps, x + eps if x < -eps, else 0.

    This is the proximal operator of eps * |.|.  Inputs within KINK_TOL of
    the boundary collapse to 0; eps == 0 returns x unchanged.
    """
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"soft_threshold requires a finite input, got {x}")
    eps = _check_threshold(eps, "eps")
    if eps == 0.0:
        return x
    if x - eps > KINK_TOL:
        return x - eps
    if x + eps < -KINK_TOL:
        return x + eps
    return 0.0


def elementwise_shrink(M, eps):
    """Soft threshold every entry of M; eps is a scalar or an array.

    Entries whose threshold is exactly zero pass through unchanged.
    """
    M = _as_matrix(M, "M")
    eps_arr = np.broadcast_to(np.asarray(eps, dtype=float), M.shape)
    if np.any(eps_arr < 0.0):
        raise ValueError("shrinkage thresholds must be >= 0")
    shrunk = np.where(
        M - eps_arr > KINK_TOL,
        M - eps_arr,
        np.where(M + eps_arr < -KINK_TOL, M + eps_arr, 0.0),
    )
    return np.where(eps_arr == 0.0, M, shrunk)


def svt(M, tau):
    """Singular value thresholding, the prox of the nuclear norm.

    Solves min_J tau*||J||_* + 1/2*||J - M||_F^2 by soft-thresholding the
    singular values of the economy SVD of M and reconstructing.  Only the
    product U diag(s) V^T is determined; individual factors carry a sign
    ambiguity.
    """
    M = _as_matrix(M, "M")
    tau = _check_threshold(tau)
    if tau == 0.0:
        return M.copy()
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"SVD did not converge on a {M.shape[0]}x{M.shape[1]} matrix "
            f"(|M|_max = {np.abs(M).max():.3e})"
        ) from exc
    s = np.where(s - tau > KINK_TOL, s - tau, 0.0)
    keep = s > 0.0
    if not keep.any():
        return np.zeros_like(M)
    return (U[:, keep] * s[keep]) @ Vt[keep]


def weighted_l1_shrink(M, R, tau):
    """Entrywise weighted soft threshold with per-entry level tau * R_ij.

    Solves min_L tau * sum_ij R_ij*|L_ij| + 1/2*||L - M||_F^2.  Entries with
    R_ij == 0 are returned unchanged.
    """
    M = _as_matrix(M, "M")
    R = _as_matrix(R, "R")
    tau = _check_threshold(tau)
    if R.shape != M.shape:
        raise ValueError(f"weight matrix shape {R.shape} does not match input shape {M.shape}")
    if np.any(R < 0.0):
        raise ValueError("weights must be entrywise >= 0")
    return elementwise_shrink(M, tau * R)


def l21_shrink(Q, tau):
    """Columnwise shrinkage, the prox of tau * (sum of column l2 norms).

    Each column with norm above tau is scaled by (1 - tau/norm); columns at
    or below the threshold vanish.  Solves, column by column,
    min_e tau*||e||_2 + 1/2*||e - q||_2^2.
    """
    Q = _as_matrix(Q, "Q")
    tau = _check_threshold(tau)
    if tau == 0.0:
        return Q.copy()
    norms = np.linalg.norm(Q, axis=0)
    scale = np.where(
        norms - tau > KINK_TOL,
        1.0 - tau / np.where(norms > 0.0, norms, 1.0),
        0.0,
    )
    return Q * scale
