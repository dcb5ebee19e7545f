"""
Desk-scale sweeps over the default scenarios. These train real models on tens of
thousands of items and are deselected unless ``-m slow`` is given.
"""
import numpy as np
import pytest

from learnmmse.config import load_config
from learnmmse.experiment import run_estimate, run_predict

pytestmark = pytest.mark.slow


def mean_nmse(tables):
    table = tables[0].copy()
    table["nmse"] = np.mean([t["nmse"].to_numpy() for t in tables], axis=0)
    return table.pivot(index="snr_db", columns="method", values="nmse")


def test_trained_predictor_beats_the_jakes_model():
    tables = []
    for train_seed in range(3):
        cfg = load_config(
            overrides=[
                ("methods", ["lmmse-sp", "lmmse-jakes", "nn-toep"]),
                ("snr.values", [-15.0, -10.0, 5.0, 10.0, 15.0]),
                ("train.seed", train_seed),
            ]
        )
        assert cfg.split.n_test >= 5000
        tables.append(run_predict(cfg, use_cache=False))

    nmse = mean_nmse(tables)
    for snr in (5.0, 10.0, 15.0):
        assert nmse.loc[snr, "nn-toep"] < nmse.loc[snr, "lmmse-jakes"]
    for snr in (-15.0, -10.0):
        assert nmse.loc[snr, "nn-toep"] <= 1.2 * nmse.loc[snr, "lmmse-sp"]


def test_learning_improves_the_convolutional_estimator():
    cfg = load_config(
        task="estimate",
        overrides=[
            ("methods", ["nolearn-circ", "cnn-circ"]),
            ("split.train_batches", 1000),
            ("train.epochs", 5),
        ],
    )
    assert cfg.split.n_test >= 5000

    nmse = mean_nmse([run_estimate(cfg, use_cache=False)])
    assert np.all(nmse["cnn-circ"] <= nmse["nolearn-circ"])
