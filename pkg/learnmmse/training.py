"""
Minibatch training shared by the neural network predictor and the CNN estimator.

Models expose their parameters as a dataclass of real numpy arrays (``ParameterSet``)
and an objective with ``loss`` and ``gradient``; ``fit`` runs Adam over a batch source.
"""
from typing import Any, Dict, Iterator, List, Optional, Protocol, Tuple, TypeVar

from dataclasses import dataclass, fields, replace

import numpy as np
from dataclasses_json import dataclass_json
from loguru import logger

from .errors import InvalidArgumentError, TrainingDivergedError

__all__ = (
    "TrainConfig",
    "ParameterSet",
    "BatchSource",
    "Objective",
    "Adam",
    "evaluate",
    "fit",
    "EVALUATION_STREAM",
)

EVALUATION_STREAM = 2 ** 31 - 1


@dataclass_json
@dataclass
class TrainConfig:
    """
    Adam hyperparameters and the epoch schedule.

    ``batch_size`` of None keeps the batch size of the training split. ``epochs = 0``
    evaluates the initial parameters without updating them.
    """

    batch_size: Optional[int] = None
    epochs: int = 20
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    plateau_tolerance: float = 1e-5
    plateau_epochs: int = 3
    hierarchical: bool = True

    def __post_init__(self):
        if self.batch_size is not None and self.batch_size < 1:
            raise InvalidArgumentError(f"batch size must be positive, got {self.batch_size}")
        if self.epochs < 0:
            raise InvalidArgumentError(f"epochs must be non-negative, got {self.epochs}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise InvalidArgumentError("moment decays must lie in [0, 1)")
        if not self.learning_rate > 0:
            raise InvalidArgumentError("learning rate must be positive")


P = TypeVar("P", bound="ParameterSet")


class ParameterSet:
    """
    Mixin for dataclasses whose fields are all real numpy arrays.
    """

    def arrays(self) -> Dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def copy(self: P) -> P:
        return replace(self, **{k: v.copy() for k, v in self.arrays().items()})

    def zeros_like(self: P) -> P:
        return replace(self, **{k: np.zeros_like(v) for k, v in self.arrays().items()})

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.arrays().values())

    def n_parameters(self) -> int:
        return sum(v.size for v in self.arrays().values())


class BatchSource(Protocol):
    def batches(self, rng: np.random.Generator, shuffle: bool = True) -> Iterator[Any]:
        ...


class Objective(Protocol):
    def loss(self, params: ParameterSet, batch: Any) -> float:
        ...

    def gradient(self, params: ParameterSet, batch: Any) -> ParameterSet:
        ...


class Adam:
    def __init__(self, params: ParameterSet, cfg: TrainConfig):
        self.lr = cfg.learning_rate
        self.beta1 = cfg.beta1
        self.beta2 = cfg.beta2
        self.eps = cfg.epsilon

        self.m = params.zeros_like().arrays()
        self.v = params.zeros_like().arrays()
        self.t = 0

    def step(self, params: ParameterSet, grads: ParameterSet):
        """
        One bias-corrected Adam update, applied to ``params`` in place.
        """
        self.t += 1
        gradients = grads.arrays()
        for key, value in params.arrays().items():
            g = gradients[key]
            self.m[key] = self.beta1 * self.m[key] + (1 - self.beta1) * g
            self.v[key] = self.beta2 * self.v[key] + (1 - self.beta2) * (g * g)

            m_hat = self.m[key] / (1 - self.beta1 ** self.t)
            v_hat = self.v[key] / (1 - self.beta2 ** self.t)

            value -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def evaluate(params: ParameterSet, objective: Objective, data: BatchSource, rng) -> float:
    total, count = 0.0, 0
    for batch in data.batches(rng, shuffle=False):
        n = len(batch)
        total += objective.loss(params, batch) * n
        count += n

    return total / count


def fit(
    params0: P,
    objective: Objective,
    data: BatchSource,
    cfg: TrainConfig,
    stage: int = 0,
) -> Tuple[P, List[float]]:
    """
    Trains a copy of ``params0`` with Adam.

    Each epoch reshuffles and redraws noise from ``default_rng([seed, stage, epoch])``.
    After every epoch the whole training set is evaluated under one fixed noise draw,
    and the best parameters seen, the initial ones included, are returned.

    Args:
        params0: Initial parameters, left untouched.
        objective: Loss and gradient of the model.
        data: Source of training batches.
        cfg: Optimizer and schedule.
        stage: Distinguishes the random streams of consecutive stages of a schedule.

    Returns:
        The best parameters and the loss trace, starting with the initial loss.

    Raises:
        TrainingDivergedError: If an update produces non-finite parameters.
    """
    eval_seed = [cfg.seed, stage, EVALUATION_STREAM]
    params = params0.copy()
    best = params0.copy()
    best_loss = evaluate(params, objective, data, np.random.default_rng(eval_seed))
    trace = [best_loss]
    logger.info(f"Stage {stage}: initial train loss {best_loss:.6g}")

    optimizer = Adam(params, cfg)
    stalled = 0
    for epoch in range(cfg.epochs):
        rng = np.random.default_rng([cfg.seed, stage, epoch])
        for batch in data.batches(rng, shuffle=True):
            optimizer.step(params, objective.gradient(params, batch))
            if not params.is_finite():
                raise TrainingDivergedError(
                    f"non-finite parameters after step {optimizer.t} (epoch {epoch})"
                )

        epoch_loss = evaluate(params, objective, data, np.random.default_rng(eval_seed))
        logger.info(f"Stage {stage}, epoch {epoch}: train loss {epoch_loss:.6g}")

        if epoch_loss < best_loss:
            best, best_loss = params.copy(), epoch_loss

        previous = trace[-1]
        trace.append(epoch_loss)
        relative_change = abs(previous - epoch_loss) / max(abs(previous), np.finfo(float).tiny)
        stalled = stalled + 1 if relative_change < cfg.plateau_tolerance else 0
        if cfg.plateau_epochs and stalled >= cfg.plateau_epochs:
            logger.warning(f"Stage {stage}: loss plateaued after epoch {epoch}, stopping")
            break

    return best, trace
