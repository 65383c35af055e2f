"""Input validation helpers used by the estimators and pipeline functions."""

import numpy as np

from .errors import DegenerateLabels, SchemaMismatch


def check_matrix(X, n_features=None, name="X"):
    """Coerce to a 2-d float64 array with no missing values.

    Args:
        X: array-like, shape (n_samples, n_features) or (n_features,).
        n_features: expected column count, or None to skip the check.
        name: argument name used in error messages.

    Returns:
        np.ndarray of shape (n_samples, n_features), dtype float64.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 1-d or 2-d, got ndim={X.ndim}")
    if n_features is not None and X.shape[1] != n_features:
        raise SchemaMismatch(
            f"{name} has {X.shape[1]} columns, expected {n_features}"
        )
    if not np.isfinite(X).all():
        raise ValueError(f"{name} contains NaN or infinite entries")
    return X


def check_labels(y, n_samples=None):
    """Coerce to a flat 0/1 int array, optionally checking the length."""
    y = np.asarray(y)
    y = y.reshape(-1)
    vals = np.unique(y)
    if not np.isin(vals, (0, 1)).all():
        raise ValueError(f"labels must be 0/1, got values {vals[:10]}")
    if n_samples is not None and y.shape[0] != n_samples:
        raise ValueError(f"got {y.shape[0]} labels for {n_samples} rows")
    return y.astype(np.int64)


def check_both_classes(y):
    """Raise DegenerateLabels unless y contains a 0 and a 1."""
    y = check_labels(y)
    if not ((y == 0).any() and (y == 1).any()):
        raise DegenerateLabels("labels must contain both classes")
    return y


def check_fitted(estimator, attribute):
    """Raise if `estimator` lacks the learned attribute (not fitted yet)."""
    if not hasattr(estimator, attribute):
        raise RuntimeError(
            f"{type(estimator).__name__} is not fitted; call fit() first"
        )
