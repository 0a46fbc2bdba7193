"""Multiclass linear classifier trained by ridge regression on one-hot
labels, with argmax decision.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import load_matrix, save_matrix
from .prox import _as_matrix


@dataclass(frozen=True)
class LabelMatrix:
    """One-hot class indicators: H is c x n with one 1 per column."""

    H: np.ndarray
    class_ids: tuple


@dataclass(frozen=True)
class LinearClassifier:
    """Weight matrix W (c x m) plus the class order its rows follow."""

    W: np.ndarray
    eta: float
    class_ids: tuple


def one_hot(labels, class_ids=None):
    """Build a LabelMatrix from per-sample labels.

    class_ids fixes the row order; it defaults to the sorted unique labels.
    """
    labels = np.asarray(labels)
    if class_ids is None:
        class_ids = tuple(np.unique(labels).tolist())
    else:
        class_ids = tuple(class_ids)
    if len(class_ids) < 2:
        raise ValueError(f"need at least 2 classes, got {len(class_ids)}")
    index = {c: i for i, c in enumerate(class_ids)}
    H = np.zeros((len(class_ids), labels.size))
    for j, lab in enumerate(labels):
        lab = lab.item() if isinstance(lab, np.generic) else lab
        if lab not in index:
            raise ValueError(f"label {lab!r} not in class_ids")
        H[index[lab], j] = 1.0
    return LabelMatrix(H, class_ids)


def fit_ridge(Z, H, eta=0.5):
    """Closed-form multivariate ridge regression of one-hot labels on Z.

    Returns the classifier with W = H Z^T (Z Z^T + eta I)^-1, the minimizer
    of ||H - W Z||_F^2 + eta ||W||_F^2.
    """
    eta = float(eta)
    if eta <= 0.0:
        raise ValueError(f"eta must be > 0, got {eta}")
    Z = _as_matrix(Z, "Z")
    Hm = _as_matrix(H.H, "H")
    if Hm.shape[1] != Z.shape[1]:
        raise ValueError(
            f"label matrix has {Hm.shape[1]} columns but Z has {Z.shape[1]}"
        )
    m = Z.shape[0]
    G = Z @ Z.T + eta * np.eye(m)
    W = np.linalg.solve(G, Z @ Hm.T).T
    return LinearClassifier(W, eta, H.class_ids)


def predict(clf, z):
    """Class of a single coefficient vector: argmax of W z.

    Ties resolve to the earliest class in class_ids.
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size != clf.W.shape[1]:
        raise ValueError(f"expected a vector of length {clf.W.shape[1]}, got {z.size}")
    return clf.class_ids[int(np.argmax(clf.W @ z))]


def predict_batch(clf, Z):
    """Predict one class per column of Z."""
    Z = _as_matrix(Z, "Z")
    if Z.shape[0] != clf.W.shape[1]:
        raise ValueError(
            f"expected {clf.W.shape[1]} rows of coefficients, got {Z.shape[0]}"
        )
    idx = np.argmax(clf.W @ Z, axis=0)
    return np.array([clf.class_ids[i] for i in idx])


def save_classifier(clf, directory):
    """Persist W to the binary matrix format plus a JSON sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_matrix(clf.W, directory / "W.lrmx")
    meta = {"eta": clf.eta, "class_ids": list(clf.class_ids)}
    (directory / "classifier.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return directory


def load_classifier(directory):
    directory = Path(directory)
    W = load_matrix(directory / "W.lrmx")
    meta = json.loads((directory / "classifier.json").read_text())
    return LinearClassifier(W, float(meta["eta"]), tuple(meta["class_ids"]))
