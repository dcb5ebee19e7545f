import logging

import numpy as np
import pytest
from loguru import logger

from learnmmse.channel import DopplerSpec
from learnmmse.config import load_config


@pytest.fixture
def caplog(caplog):
    """
    Forwards loguru log messages to the pytest logger according to the advice in
    https://loguru.readthedocs.io/en/stable/resources/migration.html
    """

    class PropogateHandler(logging.Handler):
        def emit(self, record):
            logging.getLogger(record.name).handle(record)

    handler_id = logger.add(PropogateHandler(), format="{message} {extra}")
    yield caplog
    logger.remove(handler_id)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def spec():
    """
    The indoor scenario: 4 km/h at 2.4 GHz with a 9 ms symbol clock.
    """
    return DopplerSpec.from_kmh(4.0, 2.4e9, 0.009)


def small_overrides(cache_dir):
    return [
        ("split.train_batches", 4),
        ("split.train_batch_size", 10),
        ("split.test_batches", 2),
        ("split.test_batch_size", 20),
        ("train.epochs", 2),
        ("snr.values", [0.0, 10.0]),
        ("cache.directory", str(cache_dir)),
    ]


@pytest.fixture
def predict_config(tmp_path):
    overrides = small_overrides(tmp_path / "cache") + [("output", str(tmp_path / "predict.csv"))]
    return load_config(task="predict", overrides=overrides)


@pytest.fixture
def estimate_config(tmp_path):
    overrides = small_overrides(tmp_path / "cache") + [
        ("output", str(tmp_path / "estimate.csv")),
        ("array.antennas", 8),
        ("methods", ["identity", "nolearn-circ", "nolearn-toep", "cnn-circ", "genie-omp"]),
    ]
    return load_config(task="estimate", overrides=overrides)
