"""Spectral kernel: covariance construction, eigenvalue spectra, matrix entropy,
and effective rank.

The central object is the trace-normalized covariance of a sentence's token
representations. For rows z_1..z_N with mean z_bar, each surviving centered
row is normalized to unit length, u_i = (z_i - z_bar) / ||z_i - z_bar||, and

    cov = (1/N') * sum_i u_i u_i^T

over the N' rows whose centered norm is not numerically zero. The matrix is
symmetric positive semi-definite with unit trace, so its eigenvalues form a
probability distribution; the Shannon entropy of that distribution is the
matrix entropy, and exp(entropy) is the effective rank.

All accumulation and decomposition happens in float64 regardless of the input
dtype: entropies of near-degenerate spectra are sensitive to eigenvalue noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DataError, DegenerateInput, SpectrumDivergence, ZeroMatrix
from .validation import check_matrix, check_representations, check_symmetric

__all__ = [
    "CovarianceMatrix",
    "Spectrum",
    "KIND_COVARIANCE",
    "KIND_GENERAL",
    "build_covariance",
    "covariance_spectrum",
    "representation_spectrum",
    "matrix_entropy",
    "erank_of_covariance",
    "erank_general",
    "unit_centered_rows",
]

# Centered rows shorter than this fraction of the largest centered norm carry
# no usable direction and are dropped.
ZERO_ROW_RTOL = 1e-12

# Clipped eigenvalue mass may deviate from 1 by at most this much before the
# input is considered corrupted rather than noisy.
SPECTRUM_SUM_TOL = 1e-6

# Most negative eigenvalue a symmetric solver is allowed to report on
# positive semi-definite input.
PSD_FLOOR = -1e-10

KIND_COVARIANCE = "covariance-eigenvalues"
KIND_GENERAL = "general-singular-values"

_ROUTES = ("auto", "dense", "gram")


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """Trace-normalized covariance of unit-normalized centered rows.

    Attributes
    ----------
    data : ndarray of shape (dim, dim)
        Symmetric positive semi-definite, trace 1.
    dropped_rows : int
        Number of input rows discarded because their centered norm was
        numerically zero.
    """

    data: np.ndarray
    dropped_rows: int = 0

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def validate(self, *, sym_rtol: float = 1e-12, trace_atol: float = 1e-9,
                 psd_floor: float = PSD_FLOOR) -> None:
        """Raise DataError if any structural invariant is violated."""
        check_symmetric(self.data, rtol=sym_rtol)
        trace = float(np.trace(self.data))
        if abs(trace - 1.0) > trace_atol:
            raise DataError(f"covariance trace {trace!r} deviates from 1 beyond {trace_atol:g}")
        smallest = float(np.linalg.eigvalsh(self.data)[0])
        if smallest < psd_floor:
            raise DataError(f"covariance has eigenvalue {smallest!r} below PSD floor {psd_floor:g}")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Non-increasing, non-negative eigenvalue or singular-value distribution.

    For ``kind == KIND_COVARIANCE`` the values sum to 1 and play the role of
    the probability distribution matrix entropy is taken over.
    """

    values: np.ndarray
    kind: str = KIND_COVARIANCE

    def __len__(self) -> int:
        return len(self.values)


def unit_centered_rows(reps) -> tuple[np.ndarray, int]:
    """Center rows, drop numerically-zero ones, normalize survivors.

    Returns
    -------
    (U, dropped) : U of shape (n_kept, dim) with unit rows, plus the number
        of dropped rows.

    Raises
    ------
    DegenerateInput
        If fewer than two rows survive centering (e.g. all tokens identical).
    """
    X = check_representations(reps, name="representations")
    centered = X - X.mean(axis=0)
    norms = np.linalg.norm(centered, axis=1)
    max_norm = float(norms.max())
    if max_norm == 0.0:
        raise DegenerateInput("all rows equal the mean; no spectral information")
    keep = norms >= ZERO_ROW_RTOL * max_norm
    n_kept = int(keep.sum())
    if n_kept < 2:
        raise DegenerateInput(
            f"only {n_kept} row(s) survive centering; at least 2 required"
        )
    U = centered[keep] / norms[keep, None]
    return U, X.shape[0] - n_kept


def build_covariance(reps) -> CovarianceMatrix:
    """Build the trace-normalized covariance of a representation matrix.

    Deterministic for identical input bytes; the result is explicitly
    symmetrized because a GEMM product is only symmetric up to rounding.
    """
    U, dropped = unit_centered_rows(reps)
    cov = U.T @ U / len(U)
    cov = (cov + cov.T) / 2.0
    return CovarianceMatrix(cov, dropped)


def _normalized_spectrum(eigenvalues: np.ndarray, q: int) -> Spectrum:
    """Clip, order, truncate to q values, and renormalize eigenvalue mass."""
    w = np.asarray(eigenvalues, dtype=np.float64)
    smallest = float(w.min())
    if smallest < PSD_FLOOR:
        raise SpectrumDivergence(
            f"eigenvalue {smallest!r} below PSD floor {PSD_FLOOR:g}; "
            "input is not a valid covariance"
        )
    w = np.clip(w, 0.0, None)
    # Stable descending order: equal eigenvalues keep solver order.
    w = w[np.argsort(-w, kind="stable")][:q]
    total = float(np.sum(w))
    if abs(total - 1.0) > SPECTRUM_SUM_TOL:
        raise SpectrumDivergence(
            f"clipped eigenvalue mass {total!r} deviates from 1 beyond {SPECTRUM_SUM_TOL:g}"
        )
    return Spectrum(w / total, KIND_COVARIANCE)


def representation_spectrum(reps, *, route: str = "auto") -> tuple[Spectrum, int]:
    """Covariance spectrum of a representation matrix, plus dropped-row count.

    Parameters
    ----------
    reps : array-like of shape (n_tokens, dim)
    route : {"auto", "dense", "gram"}
        "dense" decomposes the dim x dim covariance; "gram" decomposes the
        n' x n' matrix of inner products of the unit-normalized centered rows,
        whose nonzero spectrum is identical. "auto" picks "gram" when the
        sentence is shorter than the hidden size.
    """
    if route not in _ROUTES:
        raise ValueError(f"route must be one of {_ROUTES}, got {route!r}")
    U, dropped = unit_centered_rows(reps)
    n_kept, dim = U.shape
    if route == "auto":
        route = "gram" if n_kept < dim else "dense"
    if route == "gram":
        gram = U @ U.T / n_kept
        gram = (gram + gram.T) / 2.0
        return _normalized_spectrum(np.linalg.eigvalsh(gram), min(n_kept, dim)), dropped
    cov = U.T @ U / n_kept
    cov = (cov + cov.T) / 2.0
    return _normalized_spectrum(np.linalg.eigvalsh(cov), dim), dropped


def covariance_spectrum(cov_or_reps, *, route: str = "auto") -> Spectrum:
    """Eigenvalue spectrum of a covariance matrix, or of representations.

    A bare 2-D array is always treated as representations, including square
    ones; wrap a raw covariance in :class:`CovarianceMatrix` to disambiguate.
    Covariance input always takes the dense route. The returned values are
    non-increasing, clipped to >= 0, and renormalized to unit mass; length is
    min(n', dim) on the Gram route and dim on the dense route.
    """
    if isinstance(cov_or_reps, CovarianceMatrix):
        if route not in _ROUTES:
            raise ValueError(f"route must be one of {_ROUTES}, got {route!r}")
        cov = check_symmetric(cov_or_reps.data)
        return _normalized_spectrum(np.linalg.eigvalsh(cov), cov.shape[0])
    return representation_spectrum(cov_or_reps, route=route)[0]


def _as_covariance_values(spec) -> np.ndarray:
    if isinstance(spec, Spectrum):
        if spec.kind != KIND_COVARIANCE:
            raise DataError(
                f"matrix entropy is defined over covariance eigenvalues, got kind {spec.kind!r}"
            )
        values = np.asarray(spec.values, dtype=np.float64)
    else:
        values = np.asarray(spec, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise DataError(f"spectrum must be a non-empty 1-D sequence, got shape {values.shape}")
    if (values < 0).any():
        raise DataError("spectrum contains negative values")
    total = float(np.sum(values))
    if abs(total - 1.0) > 1e-9:
        raise DataError(f"spectrum mass {total!r} deviates from 1 beyond 1e-9")
    return values


def _entropy_of_distribution(p: np.ndarray) -> float:
    # 0 * ln 0 == 0; np.where keeps the array length fixed so the pairwise
    # reduction tree, and therefore the rounding, never depends on sparsity.
    # Adding 0.0 turns the -0.0 of a pure state into +0.0.
    safe = np.where(p > 0.0, p, 1.0)
    return float(-np.sum(np.where(p > 0.0, p * np.log(safe), 0.0)) + 0.0)


def matrix_entropy(spec) -> float:
    """Shannon entropy (nats) of a covariance eigenvalue spectrum.

    H = -sum_i v_i ln v_i with the convention 0 ln 0 = 0; lies in [0, ln Q].
    """
    return _entropy_of_distribution(_as_covariance_values(spec))


def erank_of_covariance(spec) -> float:
    """Effective rank of a covariance matrix: exp of its matrix entropy."""
    return float(np.exp(matrix_entropy(spec)))


def erank_general(matrix) -> float:
    """Effective rank of an arbitrary non-zero real matrix.

    Singular values are normalized to a probability distribution
    p_i = s_i / sum(s); the result exp(-sum p_i ln p_i) is invariant under
    scaling by any nonzero constant and lies in [1, rank].
    """
    A = check_matrix(matrix, name="matrix")
    if not A.any():
        raise ZeroMatrix("effective rank of an all-zero matrix is undefined")
    sigma = np.linalg.svd(A, compute_uv=False)
    p = sigma / np.sum(sigma)
    return float(np.exp(_entropy_of_distribution(p)))
