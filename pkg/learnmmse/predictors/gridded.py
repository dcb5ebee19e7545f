from typing import Optional, Sequence, Tuple, Union

from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from ..channel import CovarianceFunction, DopplerSpec, PathSet, covariance_from_paths
from ..errors import DegenerateFilterError, InvalidArgumentError
from ..lmmse import PredictorFilter, extended_covariance, predictor_filter

__all__ = (
    "PriorGrid",
    "FilterBank",
    "grid_doas",
    "build_prior_grid",
    "bias_term",
    "gate_weights",
    "gridded_predict",
)


@dataclass(frozen=True)
class PriorGrid:
    """
    Discrete uniform prior over single-path channels, one per direction of arrival.
    """

    doas: np.ndarray
    covariances: Tuple[CovarianceFunction, ...]

    @property
    def n_grid(self) -> int:
        return len(self.doas)


@dataclass(frozen=True)
class FilterBank:
    filters: Tuple[PredictorFilter, ...]
    biases: np.ndarray

    @classmethod
    def from_filters(cls, filters: Sequence[PredictorFilter]) -> "FilterBank":
        filters = tuple(filters)
        if not filters:
            raise InvalidArgumentError("a filter bank needs at least one filter")

        return cls(filters=filters, biases=np.array([bias_term(f, f.M) for f in filters]))

    @property
    def n_grid(self) -> int:
        return len(self.filters)

    @property
    def M(self) -> int:
        return self.filters[0].M

    @property
    def rows(self) -> np.ndarray:
        return np.stack([f.row for f in self.filters])

    @property
    def observation_filters(self) -> np.ndarray:
        return np.stack([f.observation_filter for f in self.filters])


def grid_doas(n_grid: int) -> np.ndarray:
    """
    Uniform DoA samples on [0, pi] including both endpoints. A single sample sits at
    pi/2, the zero Doppler direction.
    """
    if n_grid < 1:
        raise InvalidArgumentError(f"grid size must be at least 1, got {n_grid}")
    if n_grid == 1:
        return np.array([np.pi / 2])

    return np.linspace(0.0, np.pi, n_grid)


def build_prior_grid(
    n_grid: int,
    spec: DopplerSpec,
    M: int,
    l: int,
    noise_var: float,
    doas: Optional[np.ndarray] = None,
) -> Tuple[PriorGrid, FilterBank]:
    if doas is None:
        doas = grid_doas(n_grid)
    doas = np.asarray(doas, dtype=float)

    covariances = tuple(
        covariance_from_paths(PathSet.from_angles([0.0], [doa], spec), M + l, spec)
        for doa in doas
    )
    filters = [predictor_filter(extended_covariance(cov, M, l), noise_var) for cov in covariances]

    return PriorGrid(doas=doas, covariances=covariances), FilterBank.from_filters(filters)


def bias_term(W: PredictorFilter, M: int) -> float:
    """
    log |det(I - S^T W)|, the log-determinant term of the Gaussian likelihood
    rewritten in terms of the filter.

    Args:
        W: Predictor filter whose observation block is used.
        M: Observation length.

    Returns:
        The bias, a finite real number.

    Raises:
        DegenerateFilterError: If the determinant vanishes.
    """
    block = W.full[-M:]
    sign, logdet = np.linalg.slogdet(np.eye(M) - block)
    if sign == 0 or not np.isfinite(logdet):
        raise DegenerateFilterError("I - S^T W is singular")

    return float(logdet)


def gate_weights(bank: FilterBank, y: np.ndarray, noise_var: float) -> np.ndarray:
    """
    The softmax weights of each grid sample given the observation(s) ``y``.
    """
    if bank.n_grid == 0:
        raise InvalidArgumentError("empty filter bank")
    if not noise_var > 0:
        raise InvalidArgumentError(f"gridded prediction needs noise, got variance {noise_var}")

    y = np.asarray(y, dtype=complex)
    quadratic = np.einsum("...r,nrc,...c->...n", y.conj(), bank.observation_filters, y).real
    return softmax(quadratic / noise_var + bank.biases, axis=-1)


def gridded_predict(
    bank: FilterBank, y: np.ndarray, noise_var: float
) -> Union[complex, np.ndarray]:
    weights = gate_weights(bank, y, noise_var)
    combined = weights @ bank.rows
    prediction = np.sum(combined * np.asarray(y), axis=-1)
    return complex(prediction) if np.ndim(prediction) == 0 else prediction
