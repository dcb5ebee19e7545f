from typing import List, Tuple

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from loguru import logger

from ..errors import InvalidArgumentError

__all__ = (
    "Dictionary",
    "omp_path",
    "omp",
    "genie_omp_selection",
    "genie_omp",
    "genie_omp_batch",
)

RANK_TOLERANCE = 1e-10
EXACT_RECOVERY_TOLERANCE = 1e-14


@dataclass(frozen=True)
class Dictionary:
    atoms: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=complex)
        if atoms.ndim != 2 or atoms.shape[1] == 0:
            raise InvalidArgumentError(f"dictionary must be a non-empty matrix, got {atoms.shape}")

        norms = np.linalg.norm(atoms, axis=0)
        if np.max(np.abs(norms - 1)) > 1e-12:
            raise InvalidArgumentError("dictionary atoms must have unit norm")

        object.__setattr__(self, "atoms", atoms)

    @property
    def M(self) -> int:
        return self.atoms.shape[0]

    @property
    def size(self) -> int:
        return self.atoms.shape[1]

    @classmethod
    def steering(cls, M: int, oversampling: int = 4) -> "Dictionary":
        """
        ``oversampling * M`` ULA steering atoms with spatial frequencies evenly spread over
        one period. With ``oversampling = 1`` the atoms are the orthonormal DFT basis.
        """
        if M < 1 or oversampling < 1:
            raise InvalidArgumentError(
                f"need M >= 1 and oversampling >= 1, got M={M}, oversampling={oversampling}"
            )

        D = oversampling * M
        return cls(np.exp(2j * np.pi * np.outer(np.arange(M), np.arange(D)) / D) / np.sqrt(M))


def _check_sparsity(s: int, M: int):
    if not 1 <= s <= M:
        raise InvalidArgumentError(f"sparsity must lie in [1, {M}], got {s}")


def omp_path(y: np.ndarray, dictionary: Dictionary, s_max: int) -> List[np.ndarray]:
    """
    Orthogonal matching pursuit, keeping the reconstruction after every iteration.

    Each iteration adds the unused atom most correlated with the residual (lowest index
    on ties) and refits all selected atoms by least squares. The run stops early on exact
    recovery or when the selected atoms become linearly dependent; later entries then
    repeat the last reconstruction.

    Args:
        y: Observation of length M.
        dictionary: Unit norm atoms.
        s_max: Number of iterations.

    Returns:
        ``s_max`` reconstructions, entry ``s - 1`` using at most ``s`` atoms.
    """
    y = np.asarray(y, dtype=complex)
    _check_sparsity(s_max, dictionary.M)
    if y.shape != (dictionary.M,):
        raise InvalidArgumentError(f"expected an observation of length {dictionary.M}")

    atoms = dictionary.atoms
    selected: List[int] = []
    estimate = np.zeros_like(y)
    residual = y.copy()
    floor = EXACT_RECOVERY_TOLERANCE * np.linalg.norm(y)

    path = []
    stopped = False
    for _ in range(s_max):
        if not stopped and np.linalg.norm(residual) <= floor:
            stopped = True

        if not stopped:
            correlation = np.abs(atoms.conj().T @ residual)
            correlation[selected] = -1
            candidate = selected + [int(np.argmax(correlation))]

            basis, r = scipy.linalg.qr(atoms[:, candidate], mode="economic")
            diagonal = np.abs(np.diag(r))
            if diagonal.min() < RANK_TOLERANCE * diagonal.max():
                logger.debug(f"OMP stopped after {len(selected)} atoms, selection is singular")
                stopped = True
            else:
                coefficients = scipy.linalg.solve_triangular(r, basis.conj().T @ y)
                estimate = atoms[:, candidate] @ coefficients
                residual = y - estimate
                selected = candidate

        path.append(estimate.copy())

    return path


def omp(y: np.ndarray, dictionary: Dictionary, s: int) -> np.ndarray:
    return omp_path(y, dictionary, s)[-1]


def genie_omp_selection(
    y: np.ndarray, dictionary: Dictionary, h_true: np.ndarray, s_max: int
) -> Tuple[np.ndarray, int]:
    """
    OMP with the sparsity picked by an oracle that knows the true channel: the
    reconstruction closest to ``h_true`` among ``s = 1..s_max``, ties going to the
    smallest ``s``.
    """
    path = omp_path(y, dictionary, s_max)
    errors = [np.sum(np.abs(np.asarray(h_true) - estimate) ** 2) for estimate in path]
    best = int(np.argmin(errors))
    return path[best], best + 1


def genie_omp(y: np.ndarray, dictionary: Dictionary, h_true: np.ndarray, s_max: int) -> np.ndarray:
    return genie_omp_selection(y, dictionary, h_true, s_max)[0]


def genie_omp_batch(
    y: np.ndarray, dictionary: Dictionary, h_true: np.ndarray, s_max: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Row by row ``genie_omp_selection`` over a batch of observations."""
    selections = [genie_omp_selection(yb, dictionary, hb, s_max) for yb, hb in zip(y, h_true)]
    if not selections:
        return np.zeros((0, dictionary.M), dtype=complex), np.zeros(0, dtype=int)

    estimates, sparsities = zip(*selections)
    return np.stack(estimates), np.array(sparsities)
