from typing import List, Union

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..errors import InvalidArgumentError
from ..utils import SeedLike, make_rng
from .bessel import bessel_j0

__all__ = (
    "SPEED_OF_LIGHT",
    "DopplerSpec",
    "PathSet",
    "ChannelBlock",
    "CovarianceFunction",
    "sample_paths",
    "sample_path_sets",
    "synthesize_block",
    "covariance_from_paths",
    "jakes_covariance",
    "build_covariance_matrix",
    "add_awgn",
    "snr_to_noise_var",
)

SPEED_OF_LIGHT = 299792458.0


@dataclass(frozen=True)
class DopplerSpec:
    """
    Kinematics of a user moving at constant speed, together with the symbol clock.
    """

    velocity_mps: float
    carrier_hz: float
    symbol_duration_s: float
    speed_of_light: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not self.velocity_mps >= 0:
            raise InvalidArgumentError(f"velocity must be non-negative, got {self.velocity_mps}")
        if not self.carrier_hz > 0:
            raise InvalidArgumentError(f"carrier frequency must be positive, got {self.carrier_hz}")
        if not self.symbol_duration_s > 0:
            raise InvalidArgumentError(
                f"symbol duration must be positive, got {self.symbol_duration_s}"
            )

    @classmethod
    def from_kmh(cls, velocity_kmh: float, carrier_hz: float, symbol_duration_s: float):
        return cls(
            velocity_mps=velocity_kmh / 3.6,
            carrier_hz=carrier_hz,
            symbol_duration_s=symbol_duration_s,
        )

    def doppler_bandwidth(self) -> float:
        return self.velocity_mps * self.carrier_hz / self.speed_of_light

    @property
    def normalized_bandwidth(self) -> float:
        """B_D T_s, the largest Doppler shift in cycles per symbol."""
        return self.doppler_bandwidth() * self.symbol_duration_s


@dataclass(frozen=True)
class PathSet:
    """
    The plane waves impinging on the user. Gains all have magnitude ``1/sqrt(P)``
    so that the total power is one.
    """

    phases: np.ndarray
    doas: np.ndarray
    gains: np.ndarray
    doppler_hz: np.ndarray

    @classmethod
    def from_angles(cls, phases, doas, spec: DopplerSpec) -> "PathSet":
        phases = np.atleast_1d(np.asarray(phases, dtype=float))
        doas = np.atleast_1d(np.asarray(doas, dtype=float))
        if phases.shape != doas.shape or phases.ndim != 1 or len(phases) == 0:
            raise InvalidArgumentError("phases and DoAs must be equally long, non-empty vectors")

        n_paths = len(phases)
        gains = np.exp(1j * phases) / np.sqrt(n_paths)
        doppler_hz = np.cos(doas) * spec.doppler_bandwidth()
        return cls(phases=phases, doas=doas, gains=gains, doppler_hz=doppler_hz)

    @property
    def n_paths(self) -> int:
        return len(self.gains)

    def strongest(self) -> "PathSet":
        """
        The single strongest path, carrying all of the power. Equal gains resolve to
        the lowest path index.
        """
        index = int(np.argmax(np.abs(self.gains)))
        return PathSet(
            phases=self.phases[index : index + 1],
            doas=self.doas[index : index + 1],
            gains=np.exp(1j * self.phases[index : index + 1]),
            doppler_hz=self.doppler_hz[index : index + 1],
        )


@dataclass(frozen=True)
class ChannelBlock:
    coeffs: np.ndarray
    obs_len: int
    pred_len: int

    def __post_init__(self):
        if len(self.coeffs) != self.obs_len + self.pred_len:
            raise InvalidArgumentError(
                f"block holds {len(self.coeffs)} coefficients, expected "
                f"{self.obs_len} + {self.pred_len}"
            )

    def observation(self) -> np.ndarray:
        """The observation window in filter order, h = [h[M-1], ..., h[0]]."""
        return self.coeffs[: self.obs_len][::-1].copy()

    def target(self, l: int = 1) -> complex:
        if not 1 <= l <= self.pred_len:
            raise InvalidArgumentError(
                f"prediction step {l} outside of the block's prediction length {self.pred_len}"
            )
        return complex(self.coeffs[self.obs_len - 1 + l])


@dataclass(frozen=True)
class CovarianceFunction:
    samples: np.ndarray
    tolerance: float = field(default=1e-9, repr=False, compare=False)

    def __post_init__(self):
        samples = np.atleast_1d(np.asarray(self.samples, dtype=complex)).copy()
        if samples.ndim != 1 or len(samples) == 0:
            raise InvalidArgumentError("covariance function needs at least one sample")

        r0 = samples[0]
        if not (r0.real > 0 and abs(r0.imag) <= self.tolerance * r0.real):
            raise InvalidArgumentError(f"R[0] must be real and positive, got {r0}")
        if np.any(np.abs(samples) > r0.real * (1 + self.tolerance)):
            raise InvalidArgumentError("covariance samples exceed R[0] in magnitude")

        samples[0] = r0.real
        object.__setattr__(self, "samples", samples)

    @property
    def K(self) -> int:
        return len(self.samples)

    def at(self, k: int) -> complex:
        if k < 0:
            return complex(np.conj(self.samples[-k]))
        return complex(self.samples[k])


def _check_positive(name: str, value: int, minimum: int = 1):
    if value < minimum:
        raise InvalidArgumentError(f"{name} must be at least {minimum}, got {value}")


def sample_paths(P: int, spec: DopplerSpec, seed: SeedLike) -> PathSet:
    _check_positive("P", P)
    rng = make_rng(seed)
    phases = rng.uniform(0.0, 2 * np.pi, size=P)
    doas = rng.uniform(0.0, 2 * np.pi, size=P)
    return PathSet.from_angles(phases, doas, spec)


def sample_path_sets(n: int, P: int, spec: DopplerSpec, seed: int) -> List[PathSet]:
    """
    ``n`` independent path sets, each drawn from its own child of ``seed``.
    """
    children = np.random.SeedSequence(seed).spawn(n)
    return [sample_paths(P, spec, child) for child in children]


def synthesize_block(paths: PathSet, M: int, N: int, spec: DopplerSpec) -> ChannelBlock:
    _check_positive("M", M)
    _check_positive("N", N, minimum=0)

    m = np.arange(M + N)
    phasors = np.exp(2j * np.pi * np.outer(m, paths.doppler_hz * spec.symbol_duration_s))
    return ChannelBlock(coeffs=phasors @ paths.gains, obs_len=M, pred_len=N)


def covariance_from_paths(paths: PathSet, K: int, spec: DopplerSpec) -> CovarianceFunction:
    _check_positive("K", K)

    k = np.arange(K)
    powers = np.abs(paths.gains) ** 2
    phasors = np.exp(2j * np.pi * np.outer(k, paths.doppler_hz * spec.symbol_duration_s))
    return CovarianceFunction(phasors @ powers)


def jakes_covariance(spec: DopplerSpec, K: int) -> CovarianceFunction:
    _check_positive("K", K)

    k = np.arange(K)
    return CovarianceFunction(bessel_j0(2 * np.pi * k * spec.normalized_bandwidth) + 0j)


def build_covariance_matrix(cov: CovarianceFunction, M: int) -> np.ndarray:
    """
    Hermitian Toeplitz matrix with entry (r, c) equal to R[c - r].

    Args:
        cov: Covariance samples, at least ``M`` of them.
        M: Matrix size.

    Returns:
        The M x M covariance matrix of the reversed observation vector.
    """
    _check_positive("M", M)
    if cov.K < M:
        raise InvalidArgumentError(f"need {M} covariance samples, got {cov.K}")

    first_row = cov.samples[:M]
    return scipy.linalg.toeplitz(np.conj(first_row), first_row)


def add_awgn(h: np.ndarray, noise_var: float, seed: SeedLike) -> np.ndarray:
    if noise_var < 0:
        raise InvalidArgumentError(f"noise variance must be non-negative, got {noise_var}")

    h = np.asarray(h, dtype=complex)
    if noise_var == 0:
        return h.copy()

    rng = make_rng(seed)
    scale = np.sqrt(noise_var / 2)
    noise = scale * (rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape))
    return h + noise


def snr_to_noise_var(snr_db: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    >>> snr_to_noise_var(0.0)
    1.0
    """
    noise_var = 10.0 ** (-np.asarray(snr_db, dtype=float) / 10.0)
    return float(noise_var) if noise_var.ndim == 0 else noise_var
