"""Inexact augmented-Lagrangian solvers.

Three related problems share the machinery here:

* ``lclrrdl_fit`` jointly learns a compact dictionary D and a low-rank,
  locality-regularized representation Z of the training matrix X with a
  column-sparse error term E:

      min  ||Z||_* + lambda*||E||_21 + alpha*||R (.) Z||_1 + gamma/2*||D||_F^2
      s.t. X = D Z + E

  After splitting Z into auxiliary copies J (nuclear norm) and L (weighted
  l1), each block has a closed-form update and the multipliers Y1, Y2, Y3
  plus a growing penalty mu drive the constraints to feasibility.

* ``lrr_solve`` codes samples against a fixed dictionary (alpha = 0, no
  dictionary update); used for test-phase coding.

* ``rpca`` splits a single matrix into a low-rank part plus an elementwise
  sparse part; the classic baseline.

A single fit is sequential; distinct fits can run concurrently.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DataError, NumericalError
from .graph import normalize_columns, validate_locality_weights
from .prox import _as_matrix, elementwise_shrink, l21_shrink, svt, weighted_l1_shrink


@dataclass(frozen=True)
class SolverConfig:
    """Penalty weights and schedule constants for the ALM solvers.

    beta (the error weight of the fixed-dictionary and RPCA problems)
    defaults to lambda_ so train- and test-phase error models match.
    """

    lambda_: float = 1.0
    alpha: float = 0.1
    gamma: float = 1.0
    beta: float | None = None
    mu0: float = 1e-6
    rho: float = 1.15
    mu_max: float = 1e8
    eps: float = 1e-6
    max_iter: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.beta is None:
            object.__setattr__(self, "beta", float(self.lambda_))
        checks = [
            (self.lambda_ > 0, "lambda_ must be > 0"),
            (self.alpha >= 0, "alpha must be >= 0"),
            (self.gamma >= 0, "gamma must be >= 0"),
            (self.beta > 0, "beta must be > 0"),
            (self.mu0 > 0, "mu0 must be > 0"),
            (self.rho > 1, "rho must be > 1"),
            (self.mu0 < self.mu_max, "mu0 must be < mu_max"),
            (self.eps > 0, "eps must be > 0"),
            (self.max_iter >= 1, "max_iter must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)


@dataclass
class SolverState:
    """One ALM iterate: primal blocks, multipliers, penalty and counter."""

    Z: np.ndarray
    J: np.ndarray
    L: np.ndarray
    E: np.ndarray
    D: np.ndarray
    Y1: np.ndarray
    Y2: np.ndarray
    Y3: np.ndarray
    mu: float
    iteration: int = 0


@dataclass
class FitResult:
    """Solver output: representation, dictionary, error and diagnostics.

    residuals has one row per iteration with infinity norms of
    (X - D Z - E, Z - J, Z - L); mu_history records the penalty used in
    each iteration.
    """

    Z: np.ndarray
    D: np.ndarray
    E: np.ndarray
    iterations: int
    residuals: np.ndarray
    converged: bool
    mu_history: np.ndarray


class RpcaResult(NamedTuple):
    A: np.ndarray
    E: np.ndarray
    iterations: int
    converged: bool
    residuals: np.ndarray


def _inf_norm(M):
    return float(np.max(np.abs(M)))


def _check_mu(mu):
    mu = float(mu)
    if not np.isfinite(mu) or mu <= 0.0:
        raise ValueError(f"mu must be a finite scalar > 0, got {mu}")
    return mu


def update_J(Z, Y2, mu):
    """Nuclear-norm block: singular value thresholding of Z + Y2/mu at 1/mu."""
    mu = _check_mu(mu)
    return svt(Z + Y2 / mu, 1.0 / mu)


def update_Z(X, D, E, J, L, Y1, Y2, Y3, mu):
    """Representation block, the unique stationary point of the quadratic
    part of the Lagrangian in Z:

        (D^T D + 2 I) Z = D^T (X - E) + J + L + (D^T Y1 - Y2 - Y3) / mu
    """
    mu = _check_mu(mu)
    m = D.shape[1]
    G = D.T @ D + 2.0 * np.eye(m)
    rhs = D.T @ (X - E) + J + L + (D.T @ Y1 - Y2 - Y3) / mu
    try:
        return np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - G is positive definite
        raise NumericalError(f"representation solve failed: {exc}") from exc


def update_L(Z, Y3, R, alpha, mu):
    """Locality block: entrywise shrinkage of Z + Y3/mu at alpha*R_ij/mu."""
    mu = _check_mu(mu)
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    return weighted_l1_shrink(Z + Y3 / mu, R, alpha / mu)


def update_E(X, D, Z, Y1, lambda_, mu):
    """Error block: columnwise shrinkage of X - D Z + Y1/mu at lambda/mu."""
    mu = _check_mu(mu)
    if lambda_ < 0:
        raise ValueError(f"lambda_ must be >= 0, got {lambda_}")
    return l21_shrink(X - D @ Z + Y1 / mu, lambda_ / mu)


def update_D(X, Z, E, Y1, gamma, mu):
    """Dictionary block:

        D = [Y1 Z^T / mu - (E - X) Z^T] [(gamma/mu) I + Z Z^T]^-1
    """
    mu = _check_mu(mu)
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    m = Z.shape[0]
    G = (gamma / mu) * np.eye(m) + Z @ Z.T
    num = Y1 @ Z.T / mu - (E - X) @ Z.T
    try:
        return np.linalg.solve(G, num.T).T
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "dictionary update system is singular (rank-deficient Z with "
            "gamma = 0); set gamma > 0"
        ) from exc


def init_state(X, D0, mu0):
    """All-zero primal blocks and multipliers around a starting dictionary."""
    d, n = X.shape
    m = D0.shape[1]
    z = lambda *s: np.zeros(s)
    return SolverState(
        Z=z(m, n), J=z(m, n), L=z(m, n), E=z(d, n), D=np.array(D0, dtype=float),
        Y1=z(d, n), Y2=z(m, n), Y3=z(m, n), mu=float(mu0), iteration=0,
    )


def alm_step(X, weights, state, config, learn_dictionary=True):
    """One sweep over the blocks J, Z, L, E, D plus multiplier and penalty
    updates.  Returns the next state and the infinity norms of
    (X - D Z - E, Z - J, Z - L) used for the multiplier updates.
    """
    mu = state.mu
    J = update_J(state.Z, state.Y2, mu)
    Z = update_Z(X, state.D, state.E, J, state.L, state.Y1, state.Y2, state.Y3, mu)
    L = update_L(Z, state.Y3, weights, config.alpha, mu)
    E = update_E(X, state.D, Z, state.Y1, config.lambda_, mu)
    D = update_D(X, Z, E, state.Y1, config.gamma, mu) if learn_dictionary else state.D
    R1 = X - D @ Z - E
    R2 = Z - J
    R3 = Z - L
    new = SolverState(
        Z=Z, J=J, L=L, E=E, D=D,
        Y1=state.Y1 + mu * R1,
        Y2=state.Y2 + mu * R2,
        Y3=state.Y3 + mu * R3,
        mu=min(config.mu_max, config.rho * mu),
        iteration=state.iteration + 1,
    )
    return new, (_inf_norm(R1), _inf_norm(R2), _inf_norm(R3))


def augmented_lagrangian(X, weights, Z, J, L, E, D, Y1, Y2, Y3, mu, lambda_, alpha, gamma):
    """Value of the full augmented Lagrangian at the given point."""
    nuclear = float(np.linalg.svd(J, compute_uv=False).sum())
    l21 = float(np.linalg.norm(E, axis=0).sum())
    wl1 = float(np.sum(weights * np.abs(L)))
    R1 = X - D @ Z - E
    R2 = Z - J
    R3 = Z - L
    return (
        nuclear
        + lambda_ * l21
        + alpha * wl1
        + 0.5 * gamma * float(np.sum(D * D))
        + float(np.sum(Y1 * R1) + np.sum(Y2 * R2) + np.sum(Y3 * R3))
        + 0.5 * mu * float(np.sum(R1 * R1) + np.sum(R2 * R2) + np.sum(R3 * R3))
    )


def init_dictionary(X, labels, items_per_class, seed=0, allow_zero=False):
    """Class-blocked dictionary initialization.

    For every class (sorted label order) pick items_per_class training
    columns uniformly at random, normalize them and concatenate.  Returns
    the dictionary and the source column index of each atom; the indices
    align locality weights with atoms inside lclrrdl_fit.
    """
    X = _as_matrix(X, "X")
    labels = np.asarray(labels)
    if labels.shape != (X.shape[1],):
        raise ValueError("labels length must equal the number of columns of X")
    if items_per_class < 1:
        raise ValueError("items_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    picks = []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if idx.size < items_per_class:
            raise DataError(
                f"class {c!r} has {idx.size} samples, fewer than "
                f"items_per_class={items_per_class}"
            )
        picks.append(np.sort(rng.choice(idx, size=items_per_class, replace=False)))
    atom_indices = np.concatenate(picks)
    D0 = normalize_columns(X[:, atom_indices], allow_zero=allow_zero)
    return D0, atom_indices


def _atom_weights(R, n_atoms, n_samples, atom_indices):
    """Align the n x n sample weights with the m x n coefficient matrix.

    Row i of the result holds the distances between atom i's source sample
    and every sample, so coefficients of far-away atoms are penalized.
    """
    R = validate_locality_weights(R)
    if R.shape[0] != n_samples:
        raise ValueError(
            f"locality weights are {R.shape[0]}x{R.shape[0]} but X has "
            f"{n_samples} columns"
        )
    if atom_indices is None:
        if n_atoms == n_samples:
            return R.copy()
        raise ValueError(
            "atom_indices is required when the dictionary has fewer atoms "
            "than samples: pass the source column of each atom so the "
            "sample-pair weights can be aligned with coefficient rows"
        )
    idx = np.asarray(atom_indices, dtype=int)
    if idx.shape != (n_atoms,):
        raise ValueError(f"atom_indices must have length {n_atoms}, got {idx.shape}")
    if idx.min() < 0 or idx.max() >= n_samples:
        raise ValueError("atom_indices out of range")
    return R[idx, :]


def lclrrdl_fit(X, R, D0, config=None, atom_indices=None, learn_dictionary=True):
    """Joint dictionary learning and locality-constrained low-rank coding.

    X is d x n (one sample per column), R the n x n pairwise squared
    distances of those samples, D0 the d x m starting dictionary (m <= n).
    atom_indices maps each atom to the training column it came from (see
    init_dictionary); with learn_dictionary=False the dictionary stays
    frozen at D0.

    Iterates block updates until the three constraint residuals
    ||X - D Z - E||_inf, ||Z - J||_inf and ||Z - L||_inf all drop below
    config.eps, or max_iter is hit (reported, not raised).
    """
    config = config or SolverConfig()
    X = _as_matrix(X, "X")
    D0 = _as_matrix(D0, "D0")
    d, n = X.shape
    if D0.shape[0] != d:
        raise ValueError(f"D0 has {D0.shape[0]} rows, X has {d}")
    m = D0.shape[1]
    if m > n:
        raise ValueError(f"dictionary size m={m} exceeds sample count n={n}")
    weights = _atom_weights(R, m, n, atom_indices)

    state = init_state(X, D0, config.mu0)
    residuals, mus = [], []
    converged = False
    for _ in range(config.max_iter):
        mus.append(state.mu)
        state, res = alm_step(X, weights, state, config, learn_dictionary)
        residuals.append(res)
        if max(res) < config.eps:
            converged = True
            break
    return FitResult(
        Z=state.Z, D=state.D, E=state.E,
        iterations=state.iteration,
        residuals=np.array(residuals),
        converged=converged,
        mu_history=np.array(mus),
    )


def lrr_solve(X, D, config=None):
    """Low-rank coding of X against a fixed dictionary D.

        min ||Z||_* + beta*||E||_21   s.t.  X = D Z + E

    Runs the same block sweep as lclrrdl_fit specialized to alpha = 0 with
    the dictionary frozen; the locality copy then always equals Z, so only
    the nuclear-norm auxiliary J and two multipliers remain.  The previous
    Z stands in for the locality copy inside the Z update, which keeps the
    iterates identical to the joint solver's.
    """
    config = config or SolverConfig()
    X = _as_matrix(X, "X")
    D = _as_matrix(D, "D")
    d, n = X.shape
    if D.shape[0] != d:
        raise ValueError(f"D has {D.shape[0]} rows, X has {d}")
    m = D.shape[1]
    beta = config.beta

    G = D.T @ D + 2.0 * np.eye(m)
    Z = np.zeros((m, n))
    J = np.zeros((m, n))
    E = np.zeros((d, n))
    Y1 = np.zeros((d, n))
    Y2 = np.zeros((m, n))
    mu = float(config.mu0)

    residuals, mus = [], []
    iterations = 0
    converged = False
    for _ in range(config.max_iter):
        mus.append(mu)
        J = svt(Z + Y2 / mu, 1.0 / mu)
        rhs = D.T @ (X - E) + J + Z + (D.T @ Y1 - Y2) / mu
        Z = np.linalg.solve(G, rhs)
        E = l21_shrink(X - D @ Z + Y1 / mu, beta / mu)
        R1 = X - D @ Z - E
        R2 = Z - J
        Y1 = Y1 + mu * R1
        Y2 = Y2 + mu * R2
        mu = min(config.mu_max, config.rho * mu)
        res = (_inf_norm(R1), _inf_norm(R2), 0.0)
        residuals.append(res)
        iterations += 1
        if max(res) < config.eps:
            converged = True
            break
    return FitResult(
        Z=Z, D=D.copy(), E=E,
        iterations=iterations,
        residuals=np.array(residuals),
        converged=converged,
        mu_history=np.array(mus),
    )


def rpca(X, beta, config=None):
    """Split X into a low-rank part A and an elementwise-sparse part E.

        min ||A||_* + beta*||E||_1   s.t.  X = A + E

    Alternates singular value thresholding for A with elementwise soft
    thresholding for E under the same multiplier/penalty schedule as the
    other solvers.  Returns (A, E, iterations, converged, residuals).
    """
    config = config or SolverConfig()
    X = _as_matrix(X, "X")
    beta = float(beta)
    if beta <= 0.0:
        raise ValueError(f"beta must be > 0, got {beta}")
    A = np.zeros_like(X)
    E = np.zeros_like(X)
    Y = np.zeros_like(X)
    mu = float(config.mu0)
    residuals = []
    iterations = 0
    converged = False
    for _ in range(config.max_iter):
        A = svt(X - E + Y / mu, 1.0 / mu)
        E = elementwise_shrink(X - A + Y / mu, beta / mu)
        R1 = X - A - E
        Y = Y + mu * R1
        mu = min(config.mu_max, config.rho * mu)
        residuals.append(_inf_norm(R1))
        iterations += 1
        if residuals[-1] < config.eps:
            converged = True
            break
    return RpcaResult(A, E, iterations, converged, np.array(residuals))
