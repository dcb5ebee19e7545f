"""
Convolutional MMSE channel estimators for a uniform linear array.

When the prior grid consists of single-path covariances whose spatial frequencies are
evenly spread over one DFT period, the diagonalized filters are circular shifts of one
another and the gated filter bank collapses into two circular convolutions:

    w(c) = w0 * softmax(rev(w0) * c + b)

The "no learning" estimator uses the grid-derived ``w0`` and ``b``; the CNN estimator
frees both kernels and both biases and trains them per SNR.
"""
from typing import Iterator, List, Optional, Sequence, Tuple, Union

from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy.special import softmax

from ..channel import add_awgn, snr_to_noise_var
from ..dataset import TrainStream
from ..errors import InvalidArgumentError
from ..predictors.structured import (
    QMode,
    TransformQ,
    chat,
    decompose_filter,
    log_abs_det_complement,
    make_q,
)
from ..training import EVALUATION_STREAM, ParameterSet, TrainConfig, evaluate, fit

__all__ = (
    "SpectralGrid",
    "NoLearnParams",
    "CNNParams",
    "EstimationBatch",
    "CNNObjective",
    "NoisyEstimationBatches",
    "spectral_filter",
    "build_spectral_grid",
    "circular_conv",
    "circular_corr",
    "reverse",
    "spectral_weights",
    "estimate_nolearn",
    "cnn_spectral_weights",
    "cnn_estimate",
    "cnn_loss",
    "cnn_backward",
    "cnn_train",
    "train_hierarchy",
)

# largest filter weight allowed inside the circulant log-determinant
MAX_WEIGHT = 1 - 1e-12


def circular_conv(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """
    (u * v)[n] = sum_k u[k] v[(n - k) mod K] along the last axis, broadcasting over
    the leading ones.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape[-1] != v.shape[-1]:
        raise InvalidArgumentError(f"cannot convolve lengths {u.shape[-1]} and {v.shape[-1]}")

    return np.fft.ifft(np.fft.fft(u, axis=-1) * np.fft.fft(v, axis=-1), axis=-1).real


def reverse(u: np.ndarray) -> np.ndarray:
    """
    Index reversal modulo K, rev(u)[n] = u[-n mod K].

    >>> reverse(np.array([0, 1, 2, 3]))
    array([0, 3, 2, 1])
    """
    return np.roll(np.asarray(u)[..., ::-1], 1, axis=-1)


def circular_corr(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """sum_n u[n] v[(n - j) mod K], the adjoint of convolving with ``v``."""
    return circular_conv(u, reverse(v))


def spectral_filter(c: np.ndarray, noise_var: float) -> np.ndarray:
    """
    Elementwise Wiener weights ``c / (c + noise_var)``.

    >>> spectral_filter(np.ones(2), 1.0)
    array([0.5, 0.5])
    """
    if not noise_var > 0:
        raise InvalidArgumentError(f"noise variance must be positive, got {noise_var}")

    c = np.asarray(c, dtype=float)
    return c / (c + noise_var)


@dataclass(frozen=True)
class SpectralGrid:
    """
    Spectra ``c_i`` (rows of ``spectra``) of the single-path grid covariances,
    their Wiener weights ``w_i`` and the likelihood biases.
    """

    q: TransformQ
    noise_var: float
    spectra: np.ndarray
    filters: np.ndarray
    biases: np.ndarray

    @property
    def K(self) -> int:
        return self.q.K


def _grid_bias(w: np.ndarray, q: TransformQ) -> float:
    if q.mode is QMode.CIRCULANT:
        return float(np.sum(np.log1p(-np.minimum(w, MAX_WEIGHT))))

    return log_abs_det_complement(w, q)


def build_spectral_grid(
    M: int, mode: Union[str, QMode], noise_var: float, q: Optional[TransformQ] = None
) -> SpectralGrid:
    """
    The K grid samples have half-wavelength ULA steering vectors with spatial
    frequencies ``i / K``, so ``C_i = a_i a_i^H`` with ``a_i[m] = exp(j 2 pi m i / K)``.
    Circulant spectra are the diagonal of ``Q C_i Q^H``, Toeplitz spectra are the
    nonnegative least squares decomposition of ``C_i``.
    """
    q = q or make_q(mode, M)
    if q.M != M:
        raise InvalidArgumentError(f"transform has M={q.M}, grid asked for M={M}")

    steering = np.exp(2j * np.pi * np.outer(np.arange(q.K), np.arange(M)) / q.K)
    spectra = np.empty((q.K, q.K))
    for i, a in enumerate(steering):
        covariance = np.outer(a, a.conj())
        if q.mode is QMode.CIRCULANT:
            spectra[i] = np.einsum("km,mn,kn->k", q.matrix, covariance, q.matrix.conj()).real
        else:
            spectra[i] = decompose_filter(covariance, q, sample_index=i, nonnegative=True)

    filters = spectral_filter(spectra, noise_var)
    biases = np.array([_grid_bias(w, q) for w in filters])
    return SpectralGrid(q=q, noise_var=noise_var, spectra=spectra, filters=filters, biases=biases)


@dataclass
class NoLearnParams(ParameterSet):
    w0: np.ndarray
    bias: np.ndarray

    @classmethod
    def from_grid(cls, grid: SpectralGrid) -> "NoLearnParams":
        return cls(w0=grid.filters[0].copy(), bias=grid.biases.copy())


@dataclass
class CNNParams(ParameterSet):
    a1: np.ndarray
    a2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        shapes = {np.shape(v) for v in (self.a1, self.a2, self.b1, self.b2)}
        if len(shapes) != 1 or len(next(iter(shapes))) != 1:
            raise InvalidArgumentError(f"CNN parameters must be vectors of one length: {shapes}")

    @property
    def K(self) -> int:
        return len(self.a1)

    @classmethod
    def from_nolearn(cls, p: NoLearnParams) -> "CNNParams":
        return cls(
            a1=np.array(p.w0, dtype=float),
            a2=reverse(np.array(p.w0, dtype=float)),
            b1=np.array(p.bias, dtype=float),
            b2=np.zeros(len(p.w0)),
        )


def _check_observations(q: TransformQ, y: np.ndarray, K: int) -> np.ndarray:
    y = np.asarray(y, dtype=complex)
    if y.shape[-1] != q.M:
        raise InvalidArgumentError(f"expected observations of length {q.M}, got {y.shape[-1]}")
    if K != q.K:
        raise InvalidArgumentError(f"parameters have K={K}, transform has K={q.K}")

    return y


def _apply_weights(q: TransformQ, w: np.ndarray, y: np.ndarray) -> np.ndarray:
    return q.adjoint_fft(w * q.apply_fft(y))


def spectral_weights(p: NoLearnParams, c: np.ndarray) -> np.ndarray:
    return circular_conv(p.w0, softmax(circular_conv(reverse(p.w0), c) + p.bias, axis=-1))


def estimate_nolearn(
    p: NoLearnParams, q: TransformQ, y: np.ndarray, noise_var: float
) -> np.ndarray:
    """
    ``Q^H diag(w(c)) Q y`` with ``c = |Q y|^2 / noise_var`` for one observation or a batch.
    """
    y = _check_observations(q, y, len(p.w0))
    return _apply_weights(q, spectral_weights(p, chat(y, q, noise_var)), y)


def cnn_spectral_weights(p: CNNParams, c: np.ndarray) -> np.ndarray:
    return circular_conv(p.a1, softmax(circular_conv(p.a2, c) + p.b1, axis=-1)) + p.b2


def cnn_estimate(p: CNNParams, q: TransformQ, y: np.ndarray, noise_var: float) -> np.ndarray:
    y = _check_observations(q, y, p.K)
    return _apply_weights(q, cnn_spectral_weights(p, chat(y, q, noise_var)), y)


@dataclass(frozen=True)
class EstimationBatch:
    y: np.ndarray
    h: np.ndarray

    def __len__(self) -> int:
        return len(self.h)


def cnn_loss(p: CNNParams, q: TransformQ, batch: EstimationBatch, noise_var: float) -> float:
    """
    Batch mean of the squared estimation error norm.
    """
    error = cnn_estimate(p, q, batch.y, noise_var) - batch.h
    return float(np.mean(np.sum(np.abs(np.atleast_2d(error)) ** 2, axis=-1)))


def cnn_backward(
    p: CNNParams, q: TransformQ, batch: EstimationBatch, noise_var: float
) -> CNNParams:
    """
    Analytic gradient of ``cnn_loss``, propagated through both circular convolutions
    and the softmax.
    """
    y = np.atleast_2d(_check_observations(q, batch.y, p.K))
    h = np.atleast_2d(batch.h)
    B = len(y)

    x = q.apply_fft(y)
    c = np.abs(x) ** 2 / noise_var
    g = softmax(circular_conv(p.a2, c) + p.b1, axis=-1)
    w = circular_conv(p.a1, g) + p.b2
    error = q.adjoint_fft(w * x) - h

    d_w = 2 * np.real(np.conj(q.apply_fft(error)) * x) / B
    d_g = circular_corr(d_w, p.a1)
    d_z = g * (d_g - np.sum(d_g * g, axis=-1, keepdims=True))

    return CNNParams(
        a1=circular_corr(d_w, g).sum(axis=0),
        a2=circular_corr(d_z, c).sum(axis=0),
        b1=d_z.sum(axis=0),
        b2=d_w.sum(axis=0),
    )


@dataclass(frozen=True)
class CNNObjective:
    q: TransformQ
    noise_var: float

    def loss(self, params: CNNParams, batch: EstimationBatch) -> float:
        return cnn_loss(params, self.q, batch, self.noise_var)

    def gradient(self, params: CNNParams, batch: EstimationBatch) -> CNNParams:
        return cnn_backward(params, self.q, batch, self.noise_var)


@dataclass(frozen=True)
class NoisyEstimationBatches:
    stream: TrainStream
    noise_var: float
    batch_size: Optional[int] = None

    def batches(self, rng: np.random.Generator, shuffle: bool = True) -> Iterator[EstimationBatch]:
        for items in self.stream.batches(rng, shuffle=shuffle, batch_size=self.batch_size):
            h = items["channel"]
            yield EstimationBatch(y=add_awgn(h, self.noise_var, rng), h=h)


def cnn_train(
    p0: CNNParams,
    data: NoisyEstimationBatches,
    cfg: TrainConfig,
    q: TransformQ,
    stage: int = 0,
) -> Tuple[CNNParams, List[float]]:
    return fit(p0, CNNObjective(q, data.noise_var), data, cfg, stage=stage)


def train_hierarchy(
    stream: TrainStream,
    q: TransformQ,
    snr_db: Sequence[float],
    cfg: TrainConfig,
) -> List[CNNParams]:
    """
    Trains one CNN per SNR point, warm starting from high to low SNR.

    The highest SNR starts from its no-learn parameters. Every following stage starts
    from the previous stage's model or its own no-learn parameters, whichever has the
    lower training loss, and then trains on freshly shuffled data.

    Args:
        stream: Training items with a ``channel`` column.
        q: Transform of the model.
        snr_db: SNR points in any order.
        cfg: Training configuration, shared by all stages.

    Returns:
        The trained parameters in the order of ``snr_db``.
    """
    snr_db = np.asarray(snr_db, dtype=float)
    order = np.argsort(-snr_db, kind="stable")

    trained: List[Optional[CNNParams]] = [None] * len(snr_db)
    previous = None
    for stage, index in enumerate(order):
        noise_var = snr_to_noise_var(float(snr_db[index]))
        start = CNNParams.from_nolearn(
            NoLearnParams.from_grid(build_spectral_grid(q.M, q.mode, noise_var, q=q))
        )
        data = NoisyEstimationBatches(stream, noise_var, cfg.batch_size)

        if previous is not None:
            objective = CNNObjective(q, noise_var)
            eval_seed = [cfg.seed, stage, EVALUATION_STREAM]
            warm = evaluate(previous, objective, data, np.random.default_rng(eval_seed))
            cold = evaluate(start, objective, data, np.random.default_rng(eval_seed))
            if warm < cold:
                start = previous
            logger.info(
                f"Stage {stage} ({snr_db[index]:g} dB): warm start loss {warm:.6g}, "
                f"no-learn loss {cold:.6g}, starting from "
                f"{'previous stage' if warm < cold else 'no-learn parameters'}"
            )

        previous, _ = cnn_train(start, data, cfg, q, stage=stage)
        trained[index] = previous

    return trained
