from typing import Callable, List, Optional, Sequence, TypeVar, Union

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from loguru import logger

from ..channel import snr_to_noise_var
from ..config import ExperimentConfig
from ..errors import ChannelFileError
from ..estimators.cnn import CNNParams
from ..predictors.network import NNParams
from ..snapshot import SnapshotKind, load_snapshot, save_snapshot
from ..utils import derive_seed

__all__ = (
    "Stream",
    "SweepPoint",
    "ModelCache",
    "snr_points",
    "run_sweep",
    "method_seed",
)

T = TypeVar("T")


class Stream(int, enum.Enum):
    """
    Purposes of the random streams derived from the experiment seed.
    """

    DATA = 1
    TEST_NOISE = 2
    TRAIN = 3


@dataclass(frozen=True)
class SweepPoint:
    index: int
    snr_db: float

    @property
    def noise_var(self) -> float:
        return snr_to_noise_var(self.snr_db)

    def noise_seed(self, cfg: ExperimentConfig) -> int:
        return derive_seed(cfg.seed, Stream.TEST_NOISE, self.index)


def snr_points(cfg: ExperimentConfig) -> List[SweepPoint]:
    return [SweepPoint(index=i, snr_db=snr) for i, snr in enumerate(cfg.snr.points())]


def method_seed(cfg: ExperimentConfig, method: str, *keys: int) -> int:
    return derive_seed(
        cfg.seed, Stream.TRAIN, cfg.train.seed, cfg.known_methods.index(method), *keys
    )


def run_sweep(
    evaluate_point: Callable[[SweepPoint], T], points: Sequence[SweepPoint], workers: int = 1
) -> List[T]:
    """
    Evaluates every SNR point, in parallel processes when ``workers > 1``. Results come
    back in the order of ``points`` regardless of completion order.
    """
    if workers <= 1 or len(points) <= 1:
        return [evaluate_point(point) for point in points]

    with ProcessPoolExecutor(max_workers=min(workers, len(points))) as pool:
        return list(pool.map(evaluate_point, points))


@dataclass(frozen=True)
class ModelCache:
    """
    One snapshot file per (method, SNR point, configuration digest).
    """

    directory: Optional[Path]
    digest: str

    @classmethod
    def for_config(cls, cfg: ExperimentConfig, enabled: Optional[bool] = None) -> "ModelCache":
        enabled = cfg.cache.enabled if enabled is None else enabled
        directory = cfg.cache.resolve_directory() if enabled else None
        return cls(directory=directory, digest=cfg.digest())

    @property
    def enabled(self) -> bool:
        return self.directory is not None

    def path(self, method: str, point: SweepPoint) -> Path:
        return self.directory / f"{method}-{point.index:03d}-{self.digest[:16]}.lmsn"

    def load(
        self, method: str, point: SweepPoint, kind: SnapshotKind, M: int
    ) -> Optional[Union[NNParams, CNNParams]]:
        if not self.enabled:
            return None

        path = self.path(method, point)
        if not path.exists():
            logger.info(f"Cache miss for {method} at {point.snr_db:g} dB")
            return None

        try:
            snapshot = load_snapshot(path)
        except ChannelFileError as e:
            logger.warning(f"Ignoring unreadable snapshot {path}: {e}")
            return None

        if snapshot.kind is not kind or snapshot.M != M:
            logger.warning(
                f"Ignoring snapshot {path}: holds {snapshot.kind.name} with M={snapshot.M}, "
                f"expected {kind.name} with M={M}"
            )
            return None

        logger.info(f"Cache hit for {method} at {point.snr_db:g} dB")
        return snapshot.params

    def store(self, method: str, point: SweepPoint, params: Union[NNParams, CNNParams], M: int):
        if self.enabled:
            save_snapshot(self.path(method, point), params, M)
