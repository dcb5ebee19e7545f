"""
The two layer softmax network that starts out as the Structured Predictor and is then
trained per SNR on noisy observations.

The output layer is real: the complex filter of the Structured Predictor is stacked
as real part over imaginary part, so the network emits ``2M`` numbers which are
recombined into the filter applied to ``y``.
"""
from typing import Iterator, List, Optional, Tuple, Union

from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from ..channel import add_awgn
from ..dataset import TrainStream
from ..errors import InvalidArgumentError
from ..training import ParameterSet, TrainConfig, fit
from .structured import StructuredParams, TransformQ, chat

__all__ = (
    "NNParams",
    "GradientSet",
    "PredictionBatch",
    "NNObjective",
    "NoisyPredictionBatches",
    "init_from_structured",
    "forward",
    "predict",
    "loss",
    "backward",
    "train",
)


@dataclass
class NNParams(ParameterSet):
    A1: np.ndarray
    b1: np.ndarray
    A2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        if np.ndim(self.A1) != 2 or np.ndim(self.A2) != 2:
            raise InvalidArgumentError("A1 and A2 must be matrices")

        n_grid = np.shape(self.A1)[0]
        two_m = np.shape(self.A2)[0]
        if (
            np.shape(self.b1) != (n_grid,)
            or np.shape(self.A2) != (two_m, n_grid)
            or np.shape(self.b2) != (two_m,)
            or two_m % 2
        ):
            raise InvalidArgumentError(
                f"inconsistent network shapes A1 {np.shape(self.A1)}, b1 {np.shape(self.b1)}, "
                f"A2 {np.shape(self.A2)}, b2 {np.shape(self.b2)}"
            )

    @property
    def n_grid(self) -> int:
        return self.A1.shape[0]

    @property
    def K(self) -> int:
        return self.A1.shape[1]

    @property
    def M(self) -> int:
        return self.A2.shape[0] // 2


# gradients have the shapes of the parameters they belong to
GradientSet = NNParams


@dataclass(frozen=True)
class PredictionBatch:
    c: np.ndarray
    y: np.ndarray
    target: np.ndarray

    def __len__(self) -> int:
        return len(self.target)


def init_from_structured(params: StructuredParams) -> NNParams:
    A2 = np.asarray(params.A2)
    return NNParams(
        A1=np.array(params.A1, dtype=float),
        b1=np.array(params.b, dtype=float),
        A2=np.concatenate([A2.real, A2.imag]),
        b2=np.zeros(2 * A2.shape[0]),
    )


def _hidden(p: NNParams, c: np.ndarray) -> np.ndarray:
    return softmax(np.asarray(c, dtype=float) @ p.A1.T + p.b1, axis=-1)


def forward(p: NNParams, c: np.ndarray) -> np.ndarray:
    """
    ``A2 softmax(A1 c + b1) + b2`` for one periodogram or a batch of them.
    """
    c = np.asarray(c, dtype=float)
    if c.shape[-1] != p.K:
        raise InvalidArgumentError(f"expected periodograms of length {p.K}, got {c.shape[-1]}")

    return _hidden(p, c) @ p.A2.T + p.b2


def _complex_filter(output: np.ndarray, M: int) -> np.ndarray:
    return output[..., :M] + 1j * output[..., M:]


def predict(p: NNParams, c: np.ndarray, y: np.ndarray) -> Union[complex, np.ndarray]:
    y = np.asarray(y, dtype=complex)
    if y.shape[-1] != p.M:
        raise InvalidArgumentError(f"expected observations of length {p.M}, got {y.shape[-1]}")

    prediction = np.sum(_complex_filter(forward(p, c), p.M) * y, axis=-1)
    return complex(prediction) if np.ndim(prediction) == 0 else prediction


def loss(p: NNParams, batch: PredictionBatch) -> float:
    """
    Mean squared magnitude of the prediction error over the batch.
    """
    error = predict(p, batch.c, batch.y) - batch.target
    return float(np.mean(np.abs(error) ** 2))


def backward(p: NNParams, batch: PredictionBatch) -> GradientSet:
    """
    Analytic gradient of ``loss`` with respect to every parameter block.
    """
    c = np.atleast_2d(np.asarray(batch.c, dtype=float))
    y = np.atleast_2d(np.asarray(batch.y, dtype=complex))
    target = np.atleast_1d(batch.target)
    B = len(target)

    g = _hidden(p, c)
    error = np.sum(_complex_filter(g @ p.A2.T + p.b2, p.M) * y, axis=-1) - target

    # d|e|^2 / d(Re f_m) = 2 Re(e* y_m), d|e|^2 / d(Im f_m) = -2 Im(e* y_m)
    weighted = error.conj()[:, None] * y
    d_output = np.concatenate([2 * weighted.real, -2 * weighted.imag], axis=1) / B

    d_hidden = d_output @ p.A2
    d_logits = g * (d_hidden - np.sum(d_hidden * g, axis=1, keepdims=True))

    return GradientSet(
        A1=d_logits.T @ c,
        b1=d_logits.sum(axis=0),
        A2=d_output.T @ g,
        b2=d_output.sum(axis=0),
    )


class NNObjective:
    def loss(self, params: NNParams, batch: PredictionBatch) -> float:
        return loss(params, batch)

    def gradient(self, params: NNParams, batch: PredictionBatch) -> GradientSet:
        return backward(params, batch)


@dataclass(frozen=True)
class NoisyPredictionBatches:
    """
    Training items with fresh observation noise on every pass. The noise is drawn from
    the same generator that shuffles, so one seed fixes the whole epoch.
    """

    stream: TrainStream
    noise_var: float
    q: TransformQ
    batch_size: Optional[int] = None

    def batches(self, rng: np.random.Generator, shuffle: bool = True) -> Iterator[PredictionBatch]:
        for items in self.stream.batches(rng, shuffle=shuffle, batch_size=self.batch_size):
            y = add_awgn(items["observation"], self.noise_var, rng)
            yield PredictionBatch(c=chat(y, self.q, self.noise_var), y=y, target=items["target"])


def train(
    p0: NNParams, data: NoisyPredictionBatches, cfg: TrainConfig, stage: int = 0
) -> Tuple[NNParams, List[float]]:
    """
    Runs the training loop from ``p0`` on one SNR point.

    Returns:
        The trained parameters and the per-epoch training loss, initial loss first.
    """
    return fit(p0, NNObjective(), data, cfg, stage=stage)
