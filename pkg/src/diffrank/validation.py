"""Input validation helpers.

Small, sklearn-flavored ``check_*`` functions used by both the functional
kernel and the estimator front end. They normalize dtype and layout (float64,
C order) so every numeric path downstream runs at full precision regardless of
how the caller stored the data.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DataError, EmptySequence, NonFiniteInput


def check_representations(X, *, name: str = "X") -> np.ndarray:
    """Validate a token-representation matrix.

    Accepts anything array-like of shape (n_tokens, dim) with finite entries
    and returns it as a float64 C-contiguous array.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"{name} must be 2-D (n_tokens, dim), got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise DataError(f"{name} must have at least one row and one column, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise NonFiniteInput(f"{name} contains NaN or infinite entries")
    return np.ascontiguousarray(X)


def check_matrix(A, *, name: str = "A") -> np.ndarray:
    """Validate a general real matrix (finite, 2-D)."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.size == 0:
        raise DataError(f"{name} must be a non-empty 2-D matrix, got shape {A.shape}")
    if not np.isfinite(A).all():
        raise NonFiniteInput(f"{name} contains NaN or infinite entries")
    return A


def check_symmetric(C, *, rtol: float = 1e-12, name: str = "covariance") -> np.ndarray:
    """Validate a square symmetric matrix within a relative tolerance."""
    C = check_matrix(C, name=name)
    if C.shape[0] != C.shape[1]:
        raise DataError(f"{name} must be square, got shape {C.shape}")
    scale = np.abs(C).max()
    if scale > 0 and np.abs(C - C.T).max() > rtol * scale:
        raise DataError(f"{name} is not symmetric within relative tolerance {rtol:g}")
    return C


def check_logprobs(values, *, name: str = "logprobs") -> np.ndarray:
    """Validate per-token log-probabilities: 1-D, finite, each <= 0."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1:
        raise DataError(f"{name} must be 1-D, got shape {values.shape}")
    if values.size == 0:
        raise EmptySequence(f"{name} has no entries")
    if not np.isfinite(values).all():
        raise NonFiniteInput(f"{name} contains NaN or infinite entries")
    if (values > 0).any():
        raise DataError(f"{name} contains positive entries; log-probabilities must be <= 0")
    return values
