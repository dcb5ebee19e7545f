"""
The Structured Predictor: every filter of the bank is approximated by
Q^H diag(w) Q for a fixed DFT-based transform Q, so that the likelihood terms
collapse to inner products with the scaled periodogram c = |Q y|^2 / noise_var.
"""
from typing import Optional, Union

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize
from loguru import logger
from scipy.special import softmax

from ..errors import DecompositionError, DegenerateFilterError, InvalidArgumentError
from ..lmmse import PredictorFilter
from .gridded import FilterBank

__all__ = (
    "QMode",
    "BiasSource",
    "TransformQ",
    "StructuredParams",
    "make_q",
    "chat",
    "reconstruct",
    "decompose_filter",
    "decomposition_residual",
    "log_abs_det_complement",
    "structured_params",
    "structured_predict",
)


class QMode(str, enum.Enum):
    CIRCULANT = "circulant"
    TOEPLITZ = "toeplitz"


class BiasSource(str, enum.Enum):
    APPROXIMATED = "approximated"
    EXACT = "exact"


@dataclass(frozen=True)
class TransformQ:
    mode: QMode
    matrix: np.ndarray

    @property
    def K(self) -> int:
        return self.matrix.shape[0]

    @property
    def M(self) -> int:
        return self.matrix.shape[1]

    def apply(self, y: np.ndarray) -> np.ndarray:
        """Q y for a single vector or a batch of row vectors."""
        return np.asarray(y) @ self.matrix.T

    def adjoint(self, x: np.ndarray) -> np.ndarray:
        """Q^H x for a single vector or a batch of row vectors."""
        return np.asarray(x) @ self.matrix.conj()

    def apply_fft(self, y: np.ndarray) -> np.ndarray:
        """Q y as a zero padded FFT of length K."""
        return np.fft.fft(y, n=self.K, axis=-1) / np.sqrt(self.K)

    def adjoint_fft(self, x: np.ndarray) -> np.ndarray:
        return np.fft.ifft(x, axis=-1)[..., : self.M] * np.sqrt(self.K)


@dataclass(frozen=True)
class StructuredParams:
    A1: np.ndarray
    A2: np.ndarray
    b: np.ndarray

    @property
    def n_grid(self) -> int:
        return self.A1.shape[0]


def make_q(mode: Union[str, QMode], M: int) -> TransformQ:
    mode = QMode(mode)
    if M < 1:
        raise InvalidArgumentError(f"M must be positive, got {M}")

    K = M if mode is QMode.CIRCULANT else 2 * M
    return TransformQ(mode=mode, matrix=scipy.linalg.dft(K, scale="sqrtn")[:, :M])


def chat(y: np.ndarray, Q: TransformQ, noise_var: float) -> np.ndarray:
    if not noise_var > 0:
        raise InvalidArgumentError(f"noise variance must be positive, got {noise_var}")

    return np.abs(Q.apply(y)) ** 2 / noise_var


def reconstruct(w: np.ndarray, Q: TransformQ) -> np.ndarray:
    """Q^H diag(w) Q"""
    return (Q.matrix.conj().T * w) @ Q.matrix


def decomposition_residual(target: np.ndarray, w: np.ndarray, Q: TransformQ) -> float:
    return float(np.linalg.norm(target - reconstruct(w, Q)))


def _target_of(W) -> np.ndarray:
    if isinstance(W, PredictorFilter):
        return W.observation_filter
    return np.asarray(W, dtype=complex)


def _expected_rank(Q: TransformQ) -> int:
    # the Toeplitz family spans Hermitian Toeplitz matrices: 2M - 1 real degrees of freedom
    return Q.K if Q.mode is QMode.CIRCULANT else 2 * Q.M - 1


def _nonnegative_fit(target: np.ndarray, Q: TransformQ) -> np.ndarray:
    atoms = np.einsum("km,kn->kmn", Q.matrix.conj(), Q.matrix).reshape(Q.K, -1).T
    design = np.concatenate([atoms.real, atoms.imag])
    flat = target.reshape(-1)
    w, _ = scipy.optimize.nnls(design, np.concatenate([flat.real, flat.imag]))
    return w


def decompose_filter(
    W, Q: TransformQ, sample_index: Optional[int] = None, nonnegative: bool = False
) -> np.ndarray:
    """
    Real weights ``w`` such that ``Q^H diag(w) Q`` is the Frobenius-closest member of
    the diagonal family to ``S^T W``.

    The normal equations G w = d use G_kl = |(Q Q^H)_kl|^2 and d_k = Re (Q S^T W Q^H)_kk.
    In Toeplitz mode G has a one dimensional kernel (alternating signs), which leaves
    ``w^T c`` unchanged for every periodogram ``c``, so the minimum norm solution is used.

    Args:
        W: A PredictorFilter, or directly the M x M matrix to decompose.
        Q: The transform.
        sample_index: Grid sample index, reported on failure.
        nonnegative: Constrain ``w >= 0``.

    Returns:
        Real vector of length K.

    Raises:
        DecompositionError: If the normal equations are rank deficient beyond the
            known kernel or the fit is not finite.
    """
    target = _target_of(W)
    if target.shape != (Q.M, Q.M):
        raise InvalidArgumentError(f"cannot decompose a {target.shape} matrix with M={Q.M}")

    if nonnegative:
        w = _nonnegative_fit(target, Q)
    else:
        gram = np.abs(Q.matrix @ Q.matrix.conj().T) ** 2
        projections = np.einsum("km,mn,kn->k", Q.matrix, target, Q.matrix.conj()).real
        w, _, rank, _ = scipy.linalg.lstsq(gram, projections, cond=1e-10)

        if rank < _expected_rank(Q):
            raise DecompositionError(
                f"normal equations have rank {rank}, expected {_expected_rank(Q)}",
                sample_index=sample_index,
            )

    if not np.all(np.isfinite(w)):
        raise DecompositionError("non-finite decomposition", sample_index=sample_index)

    return w


def log_abs_det_complement(w: np.ndarray, Q: TransformQ) -> float:
    """log |det(I - Q^H diag(w) Q)|"""
    sign, logdet = np.linalg.slogdet(np.eye(Q.M) - reconstruct(w, Q))
    if sign == 0 or not np.isfinite(logdet):
        raise DegenerateFilterError("I - Q^H diag(w) Q is singular")

    return float(logdet)


def structured_params(
    bank: FilterBank, Q: TransformQ, bias_source: Union[str, BiasSource] = BiasSource.APPROXIMATED
) -> StructuredParams:
    bias_source = BiasSource(bias_source)
    if bank.M != Q.M:
        raise InvalidArgumentError(f"bank has M={bank.M}, transform has M={Q.M}")

    A1 = np.stack([decompose_filter(f, Q, sample_index=i) for i, f in enumerate(bank.filters)])
    approximated = np.array([log_abs_det_complement(w, Q) for w in A1])

    divergence = float(np.max(np.abs(approximated - bank.biases)))
    logger.debug(
        f"{Q.mode.value} structured biases, N={bank.n_grid}: "
        f"max |b_exact - b_approx| = {divergence:.3e}"
    )

    b = approximated if bias_source is BiasSource.APPROXIMATED else bank.biases.copy()
    return StructuredParams(A1=A1, A2=bank.rows.T.copy(), b=b)


def structured_predict(
    params: StructuredParams, c: np.ndarray, y: np.ndarray
) -> Union[complex, np.ndarray]:
    c = np.asarray(c, dtype=float)
    y = np.asarray(y, dtype=complex)
    if c.shape[-1] != params.A1.shape[1] or y.shape[-1] != params.A2.shape[0]:
        raise InvalidArgumentError(
            f"dimension mismatch: c has {c.shape[-1]} entries, y has {y.shape[-1]}, "
            f"parameters expect {params.A1.shape[1]} and {params.A2.shape[0]}"
        )

    gate = softmax(c @ params.A1.T + params.b, axis=-1)
    prediction = np.sum((gate @ params.A2.T) * y, axis=-1)
    return complex(prediction) if np.ndim(prediction) == 0 else prediction
