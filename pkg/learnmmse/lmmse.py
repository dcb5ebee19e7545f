"""
Linear MMSE estimation and l-step prediction from second order statistics.

Observation vectors are in reversed time order, y = [y[M-1], ..., y[0]], which makes
the covariance matrix of the observation window the Hermitian Toeplitz matrix
with entries R[c - r].
"""
from typing import Sequence, Union

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from loguru import logger

from .channel import CovarianceFunction, build_covariance_matrix
from .errors import InvalidArgumentError, SingularMatrixError

__all__ = (
    "hermitian_solve",
    "SelectionOps",
    "ExtendedCovariance",
    "PredictorFilter",
    "lmmse_estimator_filter",
    "lmmse_predict_direct",
    "extended_covariance",
    "predictor_filter",
    "predictor_rows",
    "empirical_covariance",
    "nmse",
)


def hermitian_solve(
    a: np.ndarray, b: np.ndarray, noise_var: float, strict: bool = False
) -> np.ndarray:
    """
    Solves ``a x = b`` for Hermitian ``a`` by Cholesky factorization.

    When the factorization fails on a noiseless system the Hermitian pseudo-inverse is
    used instead, unless ``strict`` is set.

    Args:
        a: Hermitian matrix, positive definite for every noisy system.
        b: Right hand side(s).
        noise_var: The noise variance that was loaded onto the diagonal of ``a``.
        strict: Disables the pseudo-inverse fallback.

    Returns:
        The solution with the shape of ``b``.

    Raises:
        SingularMatrixError: If the system is not positive definite and no fallback applies.
    """
    try:
        factor = scipy.linalg.cho_factor(a, lower=True)
        return scipy.linalg.cho_solve(factor, b)
    except np.linalg.LinAlgError as e:
        if noise_var == 0 and not strict:
            logger.warning(
                f"Singular {a.shape[0]}x{a.shape[0]} system without noise, using pseudo-inverse"
            )
            return scipy.linalg.pinvh(a) @ b

        raise SingularMatrixError(
            f"{a.shape[0]}x{a.shape[0]} system is not positive definite "
            f"(noise variance {noise_var})"
        ) from e


def _check_noise_var(noise_var: float):
    if not noise_var >= 0:
        raise InvalidArgumentError(f"noise variance must be non-negative, got {noise_var}")


@dataclass(frozen=True)
class SelectionOps:
    """
    The selectors e1 and S of the extended formulation, as index operations.
    S stacks an l x M zero block over I_M.
    """

    M: int
    l: int

    def __post_init__(self):
        if self.M < 1 or self.l < 1:
            raise InvalidArgumentError(f"need M >= 1 and l >= 1, got M={self.M}, l={self.l}")

    def first_row(self, a: np.ndarray) -> np.ndarray:
        """e1^T A"""
        return a[0]

    def restrict(self, a: np.ndarray) -> np.ndarray:
        """A S"""
        return a[:, self.l :]

    def inner_block(self, a: np.ndarray) -> np.ndarray:
        """S^T A S"""
        return a[self.l :, self.l :]

    def select(self, w: np.ndarray) -> np.ndarray:
        """S^T W"""
        return w[self.l :]


@dataclass(frozen=True)
class ExtendedCovariance:
    matrix: np.ndarray
    M: int
    l: int

    @property
    def selection(self) -> SelectionOps:
        return SelectionOps(self.M, self.l)


@dataclass(frozen=True)
class PredictorFilter:
    row: np.ndarray
    full: np.ndarray
    M: int
    l: int

    @property
    def observation_filter(self) -> np.ndarray:
        """S^T W, the LMMSE estimator of the observation window."""
        return SelectionOps(self.M, self.l).select(self.full)

    def apply(self, y: np.ndarray) -> Union[complex, np.ndarray]:
        return np.asarray(y) @ self.row


def lmmse_estimator_filter(
    sigma_delta: np.ndarray, noise_var: float, strict: bool = True
) -> np.ndarray:
    _check_noise_var(noise_var)

    sigma_delta = np.asarray(sigma_delta, dtype=complex)
    M = sigma_delta.shape[0]
    loaded = sigma_delta + noise_var * np.eye(M)

    # W = Sigma A^-1 = (A^-1 Sigma)^H since both are Hermitian
    return hermitian_solve(loaded, sigma_delta, noise_var, strict=strict).conj().T


def _check_samples(cov: CovarianceFunction, M: int, l: int):
    if M < 1 or l < 1:
        raise InvalidArgumentError(f"need M >= 1 and l >= 1, got M={M}, l={l}")
    if cov.K < M + l:
        raise InvalidArgumentError(f"need {M + l} covariance samples, got {cov.K}")


def lmmse_predict_direct(
    cov: CovarianceFunction, M: int, l: int, noise_var: float, y: np.ndarray
) -> Union[complex, np.ndarray]:
    _check_noise_var(noise_var)
    _check_samples(cov, M, l)

    cross = cov.samples[l : M + l]
    sigma_y = build_covariance_matrix(cov, M) + noise_var * np.eye(M)

    y = np.asarray(y, dtype=complex)
    x = hermitian_solve(sigma_y, y.T, noise_var)
    prediction = cross @ x
    return complex(prediction) if y.ndim == 1 else prediction


def extended_covariance(cov: CovarianceFunction, M: int, l: int) -> ExtendedCovariance:
    _check_samples(cov, M, l)
    return ExtendedCovariance(matrix=build_covariance_matrix(cov, M + l), M=M, l=l)


def predictor_filter(
    ext: ExtendedCovariance, noise_var: float, strict: bool = True
) -> PredictorFilter:
    _check_noise_var(noise_var)

    ops = ext.selection
    loaded = ops.inner_block(ext.matrix) + noise_var * np.eye(ext.M)
    cross = ops.restrict(ext.matrix)

    full = hermitian_solve(loaded, cross.conj().T, noise_var, strict=strict).conj().T
    return PredictorFilter(row=ops.first_row(full).copy(), full=full, M=ext.M, l=ext.l)


def predictor_rows(
    covs: Sequence[CovarianceFunction], M: int, l: int, noise_var: float
) -> np.ndarray:
    """
    Prediction rows for a collection of covariance functions, stacked as ``(len(covs), M)``.
    """
    rows = np.empty((len(covs), M), dtype=complex)
    for i, cov in enumerate(covs):
        rows[i] = predictor_filter(extended_covariance(cov, M, l), noise_var).row

    return rows


def empirical_covariance(sequence: np.ndarray, K: int) -> CovarianceFunction:
    """
    Biased sample autocovariance R[k] = 1/n sum_t x[t+k] x[t]^*, which is positive
    semidefinite by construction. A two dimensional input is a collection of
    independent segments (one per row) whose estimates are averaged.
    """
    x = np.asarray(sequence, dtype=complex)
    x = x.reshape(-1, x.shape[-1]) if x.ndim > 1 else x.reshape(1, -1)
    n = x.shape[1]
    if n < K or len(x) == 0:
        raise InvalidArgumentError(f"need at least {K} samples per segment, got {n}")

    samples = np.array(
        [np.mean(np.sum(x[:, k:] * x[:, : n - k].conj(), axis=1)) / n for k in range(K)]
    )
    return CovarianceFunction(samples)


def nmse(truth: np.ndarray, estimate: np.ndarray) -> float:
    """
    Mean over the batch of the squared error norm, divided by the vector dimension.
    One dimensional inputs are a batch of scalars.
    """
    truth = np.asarray(truth)
    estimate = np.asarray(estimate)
    if truth.shape != estimate.shape:
        raise InvalidArgumentError(f"shape mismatch {truth.shape} vs {estimate.shape}")

    squared = np.abs(truth - estimate) ** 2
    if squared.ndim == 1:
        return float(np.mean(squared))

    return float(np.mean(np.sum(squared, axis=-1)) / squared.shape[-1])
