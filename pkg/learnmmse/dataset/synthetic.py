"""
Synthetic stand-ins for exported channel data, in the same item layout the file
ingestion produces.
"""
import numpy as np
from loguru import logger

from ..channel import DopplerSpec, covariance_from_paths, sample_path_sets, synthesize_block
from ..errors import InvalidArgumentError
from ..utils import SeedLike, make_rng
from .streams import ItemTable, normalize

__all__ = (
    "ula_steering",
    "synthesize_trajectories",
    "synthesize_cluster_channels",
)


def ula_steering(M: int, angles: np.ndarray) -> np.ndarray:
    """
    Half-wavelength ULA steering vectors ``exp(j pi m sin(theta))`` along the last axis.
    """
    m = np.arange(M)
    return np.exp(1j * np.pi * np.multiply.outer(np.sin(angles), m))


def synthesize_trajectories(
    n: int, M: int, l: int, spec: DopplerSpec, P: int, seed: int
) -> ItemTable:
    """
    ``n`` independent prediction items, each from its own set of ``P`` paths.

    Next to the coefficients every item carries the covariance samples of its own
    paths (``cov_perfect``) and of its strongest path alone (``cov_sp``), K = M + l.
    """
    if n < 0:
        raise InvalidArgumentError(f"item count must be non-negative, got {n}")

    K = M + l
    blocks = np.empty((n, K), dtype=complex)
    cov_perfect = np.empty((n, K), dtype=complex)
    cov_sp = np.empty((n, K), dtype=complex)
    for i, paths in enumerate(sample_path_sets(n, P, spec, seed)):
        blocks[i] = synthesize_block(paths, M, l, spec).coeffs
        cov_perfect[i] = covariance_from_paths(paths, K, spec).samples
        cov_sp[i] = covariance_from_paths(paths.strongest(), K, spec).samples

    logger.info(f"Synthesized {n} trajectories with {P} paths, M={M}, l={l}")
    return ItemTable(
        {
            "block": blocks,
            "observation": blocks[:, M - 1 :: -1],
            "target": blocks[:, M - 1 + l],
            "cov_perfect": cov_perfect,
            "cov_sp": cov_sp,
        }
    )


def synthesize_cluster_channels(
    n: int, M: int, spread_deg: float = 2.0, subpaths: int = 20, seed: SeedLike = 0
) -> np.ndarray:
    """
    Single-cluster ULA channels. The cluster center is uniform on [-pi/2, pi/2), the
    subpaths scatter around it with a Gaussian angular spread and uniform phases.

    Returns:
        ``(n, M)`` channel vectors normalized to an average squared norm of ``M``.
    """
    if subpaths < 1:
        raise InvalidArgumentError(f"need at least one subpath, got {subpaths}")

    rng = make_rng(seed)
    centers = rng.uniform(-np.pi / 2, np.pi / 2, size=(n, 1))
    angles = centers + np.deg2rad(spread_deg) * rng.standard_normal((n, subpaths))
    phases = np.exp(2j * np.pi * rng.uniform(size=(n, subpaths)))

    channels = np.einsum("ns,nsm->nm", phases, ula_steering(M, angles)) / np.sqrt(subpaths)
    if n == 0:
        return channels

    return normalize(channels, float(M))
