"""Scikit-learn style front end for the spectral kernel."""

from __future__ import annotations

import math

from sklearn.base import BaseEstimator

from .spectral import matrix_entropy, representation_spectrum
from .validation import check_representations


class EffectiveRank(BaseEstimator):
    """Matrix entropy and effective rank of token representations.

    Fitting builds the trace-normalized covariance of the rows of ``X``
    (tokens as samples, hidden units as features) and summarizes its
    eigenvalue spectrum, much like a decomposition estimator exposes its
    explained variance.

    Parameters
    ----------
    route : {"auto", "dense", "gram"}, default="auto"
        How to extract the spectrum. "gram" works on the n_tokens x n_tokens
        inner-product matrix and wins when sentences are much shorter than
        the hidden size; "auto" chooses per input.

    Attributes
    ----------
    spectrum_ : ndarray
        Non-increasing eigenvalues of the covariance, summing to 1.
    entropy_ : float
        Shannon entropy of ``spectrum_`` in nats.
    erank_ : float
        exp(entropy_), the effective rank.
    dropped_rows_ : int
        Rows discarded because their centered norm was numerically zero.
    n_tokens_ : int
        Rows seen during fit (before dropping).
    n_features_in_ : int
        Hidden size seen during fit.

    Examples
    --------
    >>> import numpy as np
    >>> from diffrank import EffectiveRank
    >>> X = np.eye(4)
    >>> round(EffectiveRank().fit(X).erank_, 12)
    3.0
    """

    def __init__(self, route: str = "auto"):
        self.route = route

    def fit(self, X, y=None):
        """Compute the covariance spectrum of ``X`` with shape (n_tokens, dim)."""
        X = check_representations(X)
        spectrum, dropped = representation_spectrum(X, route=self.route)
        self.n_tokens_ = int(X.shape[0])
        self.n_features_in_ = int(X.shape[1])
        self.dropped_rows_ = dropped
        self.spectrum_ = spectrum.values
        self.entropy_ = matrix_entropy(spectrum)
        self.erank_ = math.exp(self.entropy_)
        return self
