from typing import Dict, Iterator, Optional, Tuple

from dataclasses import dataclass, field

import numpy as np
from dataclasses_json import dataclass_json
from loguru import logger

from ..errors import InsufficientDataError, InvalidArgumentError, ZeroPowerError

__all__ = (
    "ItemTable",
    "SplitSpec",
    "TrainStream",
    "TestStream",
    "normalize",
    "window_trajectory",
    "split_and_batch",
)


@dataclass(frozen=True)
class ItemTable:
    """
    Named numpy columns sharing their first axis, one row per item.

    Prediction items carry ``block`` (time ordered coefficients), ``observation``
    (reversed window) and ``target``; estimation items carry ``channel``.
    """

    columns: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        lengths = {name: len(column) for name, column in self.columns.items()}
        if len(set(lengths.values())) > 1:
            raise InvalidArgumentError(f"columns differ in length: {lengths}")

    def __len__(self) -> int:
        for column in self.columns.values():
            return len(column)
        return 0

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def __contains__(self, name: str) -> bool:
        return name in self.columns

    def take(self, indices: np.ndarray) -> "ItemTable":
        return ItemTable({name: column[indices] for name, column in self.columns.items()})


@dataclass_json
@dataclass
class SplitSpec:
    train_batches: int
    train_batch_size: int
    test_batches: int
    test_batch_size: int
    split_seed: int = 0

    def __post_init__(self):
        for name in ("train_batches", "train_batch_size", "test_batches", "test_batch_size"):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def n_train(self) -> int:
        return self.train_batches * self.train_batch_size

    @property
    def n_test(self) -> int:
        return self.test_batches * self.test_batch_size


def _chunks(indices: np.ndarray, size: int) -> Iterator[np.ndarray]:
    for start in range(0, len(indices), size):
        yield indices[start : start + size]


@dataclass(frozen=True)
class TrainStream:
    items: ItemTable
    batch_size: int

    def __len__(self) -> int:
        return len(self.items)

    def batches(
        self, rng: np.random.Generator, shuffle: bool = True, batch_size: Optional[int] = None
    ) -> Iterator[ItemTable]:
        """
        Yields the training items in batches. With ``shuffle`` a fresh permutation is drawn
        from ``rng``, which reorders both the batches and the items inside of them.
        """
        order = rng.permutation(len(self.items)) if shuffle else np.arange(len(self.items))
        for indices in _chunks(order, batch_size or self.batch_size):
            yield self.items.take(indices)


@dataclass(frozen=True)
class TestStream:
    __test__ = False

    items: ItemTable
    batch_size: int

    def __len__(self) -> int:
        return len(self.items)

    def batches(self) -> Iterator[ItemTable]:
        for indices in _chunks(np.arange(len(self.items)), self.batch_size):
            yield self.items.take(indices)


def normalize(channels: np.ndarray, target: float) -> np.ndarray:
    """
    Rescales all channels by one common factor so that the empirical mean of the
    squared norm of a row equals ``target``. One dimensional input is a sequence of
    scalar coefficients.

    >>> normalize(np.array([2.0, 2.0]), 1.0)
    array([1., 1.])
    """
    channels = np.asarray(channels)
    if not target > 0:
        raise InvalidArgumentError(f"normalization target must be positive, got {target}")

    squared = np.abs(channels) ** 2
    power = float(np.mean(squared if channels.ndim == 1 else np.sum(squared, axis=-1)))
    if not power > 0:
        raise ZeroPowerError("cannot normalize channels with zero average power")

    return channels * np.sqrt(target / power)


def window_trajectory(
    sequence: np.ndarray, M: int, l: int, overlap: bool = False
) -> ItemTable:
    """
    Cuts a trajectory of channel coefficients into groups of ``M + l`` consecutive
    coefficients. Groups are disjoint unless ``overlap`` is set, in which case one starts
    at every index. Coefficients left over at the end are dropped.
    """
    if M < 1 or l < 1:
        raise InvalidArgumentError(f"need M >= 1 and l >= 1, got M={M}, l={l}")

    sequence = np.asarray(sequence, dtype=complex).reshape(-1)
    length = M + l
    starts = np.arange(0, len(sequence) - length + 1, 1 if overlap else length)

    blocks = sequence[starts[:, None] + np.arange(length)].reshape(len(starts), length)
    return ItemTable(
        {
            "block": blocks,
            "observation": blocks[:, M - 1 :: -1],
            "target": blocks[:, M - 1 + l],
        }
    )


def split_and_batch(items: ItemTable, spec: SplitSpec) -> Tuple[TrainStream, TestStream]:
    """
    Randomly assigns items to a training and a test set of the requested sizes.

    Raises:
        InsufficientDataError: If there are fewer items than the split requires.
    """
    needed = spec.n_train + spec.n_test
    if len(items) < needed:
        raise InsufficientDataError(
            f"split needs {spec.n_train} training and {spec.n_test} test items, "
            f"only {len(items)} available"
        )

    order = np.random.default_rng(spec.split_seed).permutation(len(items))
    train = items.take(order[: spec.n_train])
    test = items.take(order[spec.n_train : needed])
    logger.info(
        f"Split {len(items)} items into {spec.train_batches}x{spec.train_batch_size} training "
        f"and {spec.test_batches}x{spec.test_batch_size} test items"
    )

    return (
        TrainStream(items=train, batch_size=spec.train_batch_size),
        TestStream(items=test, batch_size=spec.test_batch_size),
    )
