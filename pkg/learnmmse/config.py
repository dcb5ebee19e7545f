"""
Experiment configuration: JSON layered over the packaged defaults of a task.

    learnmmse/resources/{task}.json  <-  user --config file  <-  --set key=value overrides
"""
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import json
from dataclasses import dataclass, field
from pathlib import Path

import appdirs
import numpy as np
from dataclasses_json import dataclass_json

from .channel import DopplerSpec
from .collections import deep_update, nested_set
from .dataset import SplitSpec, read_header
from .errors import ChannelFileError, ConfigurationError, LearnMMSEError
from .predictors import BiasSource
from .training import TrainConfig
from .utils import LIB_ROOT, file_digest, stable_digest
from .version import __version__

__all__ = (
    "TASKS",
    "PREDICT_METHODS",
    "ESTIMATE_METHODS",
    "ChannelSection",
    "ArraySection",
    "ModelSection",
    "SnrSection",
    "CacheSection",
    "LoggingSection",
    "ExperimentConfig",
    "default_config_for_task",
    "load_default_tree",
    "load_config",
)

TASKS = ("predict", "estimate")

PREDICT_METHODS = (
    "lmmse-perfect",
    "lmmse-sp",
    "lmmse-jakes",
    "gridded",
    "structured-circ",
    "structured-toep",
    "nn-circ",
    "nn-toep",
)

ESTIMATE_METHODS = (
    "identity",
    "nolearn-circ",
    "nolearn-toep",
    "cnn-circ",
    "cnn-toep",
    "genie-omp",
)

SYNTHETIC = "synthetic"


@dataclass_json
@dataclass
class ChannelSection:
    velocity_kmh: float = 4.0
    carrier_hz: float = 2.4e9
    symbol_duration_s: float = 0.009
    paths: int = 3


@dataclass_json
@dataclass
class ArraySection:
    antennas: int = 16
    cluster_spread_deg: float = 2.0
    subpaths: int = 20


@dataclass_json
@dataclass
class ModelSection:
    observation_length: int = 4
    prediction_step: int = 1
    n_grid: Optional[int] = None
    bias_source: str = BiasSource.APPROXIMATED.value
    overlap_windows: bool = False
    omp_oversampling: int = 4
    omp_max_sparsity: Optional[int] = None


@dataclass_json
@dataclass
class SnrSection:
    start: float = -15.0
    stop: float = 15.0
    step: float = 2.5
    values: Optional[List[float]] = None

    def points(self) -> List[float]:
        """
        ``values`` when given, otherwise ``start, start + step, ...`` up to and
        including ``stop``.
        """
        if self.values is not None:
            return [float(v) for v in self.values]
        if not self.step > 0:
            return []

        count = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [float(self.start + i * self.step) for i in range(max(count, 0))]


@dataclass_json
@dataclass
class CacheSection:
    enabled: bool = True
    directory: Optional[str] = None

    def resolve_directory(self) -> Path:
        if self.directory is not None:
            return Path(self.directory)

        return Path(appdirs.user_cache_dir("learnmmse"))


@dataclass_json
@dataclass
class LoggingSection:
    level: str = "WARNING"
    file: Optional[str] = None


@dataclass_json
@dataclass
class ExperimentConfig:
    task: str
    split: SplitSpec
    source: str = SYNTHETIC
    methods: List[str] = field(default_factory=list)
    seed: int = 0
    output: str = "results.csv"
    workers: int = 1
    channel: ChannelSection = field(default_factory=ChannelSection)
    array: ArraySection = field(default_factory=ArraySection)
    model: ModelSection = field(default_factory=ModelSection)
    snr: SnrSection = field(default_factory=SnrSection)
    train: TrainConfig = field(default_factory=TrainConfig)
    cache: CacheSection = field(default_factory=CacheSection)
    logging: LoggingSection = field(default_factory=LoggingSection)

    @property
    def is_synthetic(self) -> bool:
        return self.source == SYNTHETIC

    @property
    def M(self) -> int:
        if self.task == "estimate":
            return self.array.antennas
        return self.model.observation_length

    @property
    def l(self) -> int:
        return self.model.prediction_step

    @property
    def known_methods(self) -> Tuple[str, ...]:
        return PREDICT_METHODS if self.task == "predict" else ESTIMATE_METHODS

    @property
    def omp_max_sparsity(self) -> int:
        if self.model.omp_max_sparsity is not None:
            return self.model.omp_max_sparsity
        return max(self.M // 2, 1)

    def doppler_spec(self) -> DopplerSpec:
        return DopplerSpec.from_kmh(
            self.channel.velocity_kmh, self.channel.carrier_hz, self.channel.symbol_duration_s
        )

    def digest(self) -> str:
        """
        Identifies everything trained models depend on: the settings, the contents of
        the input file and the package version. Output location, worker count, logging
        and caching do not take part.
        """
        tree = self.to_dict()
        for key in ("output", "workers", "cache", "logging", "methods"):
            tree.pop(key)

        tree["version"] = __version__
        if not self.is_synthetic:
            tree["source_sha256"] = file_digest(self.source)
        return stable_digest(tree)

    def validate(self) -> "ExperimentConfig":
        """
        Checks everything that can be checked before any computation starts.

        Raises:
            ConfigurationError: Naming the first offending setting.
        """
        if self.task not in TASKS:
            raise ConfigurationError(f"Unknown task '{self.task}', expected one of {TASKS}")

        if self.snr.values is None and not self.snr.step > 0:
            raise ConfigurationError(f"snr.step must be positive, got {self.snr.step}")
        if not self.snr.points():
            raise ConfigurationError("The SNR sweep is empty")

        if self.M < 1:
            raise ConfigurationError(f"The observation dimension must be positive, got {self.M}")
        if self.l < 1:
            raise ConfigurationError(f"model.prediction_step must be positive, got {self.l}")
        if self.model.n_grid is not None and self.model.n_grid < 1:
            raise ConfigurationError(f"model.n_grid must be positive, got {self.model.n_grid}")
        if self.model.bias_source not in {b.value for b in BiasSource}:
            raise ConfigurationError(f"Unknown model.bias_source '{self.model.bias_source}'")
        if self.model.omp_oversampling < 1:
            raise ConfigurationError("model.omp_oversampling must be positive")
        if not 1 <= self.omp_max_sparsity <= self.M:
            raise ConfigurationError(
                f"model.omp_max_sparsity must lie in [1, {self.M}], got {self.omp_max_sparsity}"
            )

        if not self.methods:
            raise ConfigurationError("The method list is empty")
        unknown = [m for m in self.methods if m not in self.known_methods]
        if unknown:
            raise ConfigurationError(
                f"Unknown {self.task} methods {unknown}, expected some of {self.known_methods}"
            )
        if len(set(self.methods)) != len(self.methods):
            raise ConfigurationError(f"Methods are listed twice: {self.methods}")

        if self.workers < 1:
            raise ConfigurationError(f"workers must be positive, got {self.workers}")
        if self.channel.paths < 1:
            raise ConfigurationError(f"channel.paths must be positive, got {self.channel.paths}")
        if self.array.subpaths < 1:
            raise ConfigurationError(f"array.subpaths must be positive, got {self.array.subpaths}")
        if self.task == "predict":
            try:
                self.doppler_spec()
            except LearnMMSEError as e:
                raise ConfigurationError(f"Invalid channel section: {e}") from e

        if not self.is_synthetic:
            self._validate_source_file()

        return self

    def _validate_source_file(self):
        path = Path(self.source)
        if not path.exists():
            raise ConfigurationError(f"Input file {path} does not exist")
        try:
            header = read_header(path)
        except (ChannelFileError, OSError) as e:
            raise ConfigurationError(f"Input file {path} is not a channel file: {e}") from e

        if self.task == "estimate" and header.dim != self.array.antennas:
            raise ConfigurationError(
                f"Input file {path} holds vectors of dimension {header.dim}, "
                f"but array.antennas is {self.array.antennas}"
            )
        if self.task == "predict" and "lmmse-sp" in self.methods:
            raise ConfigurationError(
                "lmmse-sp needs the path parameters of every realization "
                f"and cannot be used with the input file {path}"
            )


def default_config_for_task(task: str) -> Path:
    if task not in TASKS:
        raise ConfigurationError(f"Unknown task '{task}', expected one of {TASKS}")

    return LIB_ROOT / "resources" / f"{task}.json"


def load_default_tree(task: str) -> Dict[str, Any]:
    with open(str(default_config_for_task(task))) as f:
        return json.load(f)


def load_config(
    path: Optional[Union[str, Path]] = None,
    task: str = "predict",
    overrides: Iterable[Tuple[str, Any]] = (),
) -> ExperimentConfig:
    """
    Builds and validates the configuration of one experiment.

    Args:
        path: Optional user configuration in JSON.
        task: Selects the packaged defaults.
        overrides: ``(dotted.key, value)`` pairs applied last.

    Returns:
        The validated configuration.

    Raises:
        ConfigurationError: If a file cannot be read, a key is unknown or a value is invalid.
    """
    tree = load_default_tree(task)
    if path is not None:
        try:
            with open(str(path)) as f:
                user = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"Cannot read configuration {path}: {e}") from e

        if not isinstance(user, dict):
            raise ConfigurationError(f"Configuration {path} must hold a JSON object")
        deep_update(user, tree, strict=True)

    for key, value in overrides:
        nested_set(tree, key, value)

    if tree.get("task") != task:
        raise ConfigurationError(f"Configuration is for task '{tree.get('task')}', not '{task}'")

    try:
        cfg = ExperimentConfig.from_dict(tree)
    except ConfigurationError:
        raise
    except (LearnMMSEError, KeyError, TypeError, ValueError) as e:
        raise ConfigurationError(f"Invalid configuration: {e}") from e

    return cfg.validate()
