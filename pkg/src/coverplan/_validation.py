"""Input validation helpers shared by the estimator API and the toolkit."""

from __future__ import annotations

import numpy as np

__all__ = ["check_labels", "check_scores", "prob_to_scores"]

_PROB_SUM_TOL = 1e-9


def check_labels(y) -> np.ndarray:
    """Coerce to a 1-d int array of binary labels {0, 1}."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError(f"labels must be 1-d, got shape {y.shape}")
    vals = np.unique(y)
    if not np.isin(vals, (0, 1)).all():
        raise ValueError(f"labels must be binary in {{0, 1}}, got values {vals}")
    return y.astype(int)


def check_scores(X) -> np.ndarray:
    """Coerce to an (n, 2) float array of per-class nonconformity scores."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValueError(f"scores must have shape (n, 2), got {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError("scores contain non-finite values")
    return X


def prob_to_scores(X) -> np.ndarray:
    """Map predicted probabilities to nonconformity scores s_y = 1 - P(y|x).

    Accepts either a 1-d array of P(y=1|x) or an (n, 2) predict_proba-style
    matrix [P(0|x), P(1|x)]. The returned score pairs satisfy s0 + s1 = 1.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        p1 = X
    elif X.ndim == 2 and X.shape[1] == 2:
        if np.abs(X.sum(axis=1) - 1.0).max() > _PROB_SUM_TOL:
            raise ValueError("probability rows must sum to 1")
        p1 = X[:, 1]
    else:
        raise ValueError(f"expected (n,) class-1 probabilities or an (n, 2) matrix, got {X.shape}")
    if p1.size and (p1.min() < 0.0 or p1.max() > 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    # s(x, 0) = 1 - P(0|x) = p1 ; s(x, 1) = 1 - P(1|x) = 1 - p1
    return np.column_stack([p1, 1.0 - p1])
