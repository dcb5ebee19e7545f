"""
The prediction experiment: one step ahead prediction of a time-variant channel from
``M`` noisy past observations, compared across LMMSE baselines, the Gridded and
Structured Predictors and the trained networks.
"""
from typing import Callable, Dict, List, Optional, Tuple

import functools
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
from loguru import logger

from ..channel import CovarianceFunction, add_awgn, jakes_covariance
from ..config import ExperimentConfig
from ..dataset import (
    TestStream,
    TrainStream,
    load_channels,
    normalize,
    split_and_batch,
    synthesize_trajectories,
    window_trajectory,
)
from ..lmmse import empirical_covariance, lmmse_predict_direct, nmse, predictor_rows
from ..predictors import build_prior_grid, gridded_predict, make_q, network, structured_params
from ..predictors.structured import QMode, StructuredParams, TransformQ, chat, structured_predict
from ..snapshot import SnapshotKind
from ..utils import derive_seed
from .run import ModelCache, Stream, SweepPoint, method_seed, run_sweep, snr_points
from .save import results_frame

__all__ = (
    "prepare_predict_data",
    "evaluate_predict_point",
    "run_predict",
)

MODES = {"circ": QMode.CIRCULANT, "toep": QMode.TOEPLITZ}


def prepare_predict_data(cfg: ExperimentConfig) -> Tuple[TrainStream, TestStream]:
    M, l = cfg.M, cfg.l
    if cfg.is_synthetic:
        items = synthesize_trajectories(
            cfg.split.n_train + cfg.split.n_test,
            M,
            l,
            cfg.doppler_spec(),
            cfg.channel.paths,
            seed=derive_seed(cfg.seed, Stream.DATA),
        )
    else:
        logger.info(f"Reading trajectory from {cfg.source}")
        trajectory = normalize(load_channels(cfg.source).reshape(-1), 1.0)
        items = window_trajectory(trajectory, M, l, overlap=cfg.model.overlap_windows)

    return split_and_batch(items, cfg.split)


@dataclass(frozen=True)
class PredictContext:
    cfg: ExperimentConfig
    train: TrainStream
    test: TestStream
    cache: ModelCache


def _apply_rows(rows: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.sum(rows * y, axis=-1)


def _per_realization(
    ctx: PredictContext, column: str, y: np.ndarray, noise_var: float
) -> np.ndarray:
    covs = [CovarianceFunction(samples) for samples in ctx.test.items[column]]
    return _apply_rows(predictor_rows(covs, ctx.cfg.M, ctx.cfg.l, noise_var), y)


def _train_network(
    ctx: PredictContext,
    method: str,
    point: SweepPoint,
    structured: StructuredParams,
    q: TransformQ,
) -> network.NNParams:
    cfg = ctx.cfg
    params = ctx.cache.load(method, point, SnapshotKind.NETWORK, cfg.M)
    if params is not None:
        return params

    train_cfg = replace(cfg.train, seed=method_seed(cfg, method, point.index))
    data = network.NoisyPredictionBatches(ctx.train, point.noise_var, q, cfg.train.batch_size)
    params, trace = network.train(network.init_from_structured(structured), data, train_cfg)
    logger.info(
        f"{method} at {point.snr_db:g} dB: train loss {trace[0]:.6g} -> {min(trace):.6g} "
        f"after {len(trace) - 1} epochs"
    )

    ctx.cache.store(method, point, params, cfg.M)
    return params


def evaluate_predict_point(ctx: PredictContext, point: SweepPoint) -> List[Tuple]:
    cfg = ctx.cfg
    M, l, noise_var = cfg.M, cfg.l, point.noise_var
    spec = cfg.doppler_spec()
    logger.info(f"Evaluating {len(cfg.methods)} predictors at {point.snr_db:g} dB")

    y = add_awgn(ctx.test.items["observation"], noise_var, point.noise_seed(cfg))
    target = ctx.test.items["target"]

    @functools.lru_cache(maxsize=None)
    def structured(mode: QMode) -> Tuple[TransformQ, StructuredParams]:
        q = make_q(mode, M)
        _, bank = build_prior_grid(cfg.model.n_grid or q.K, spec, M, l, noise_var)
        return q, structured_params(bank, q, cfg.model.bias_source)

    def lmmse_perfect():
        if cfg.is_synthetic:
            return _per_realization(ctx, "cov_perfect", y, noise_var)

        cov = empirical_covariance(ctx.train.items["block"], M + l)
        return lmmse_predict_direct(cov, M, l, noise_var, y)

    def gridded():
        _, bank = build_prior_grid(cfg.model.n_grid or 2 * M, spec, M, l, noise_var)
        return gridded_predict(bank, y, noise_var)

    def structured_method(mode: QMode):
        q, params = structured(mode)
        return structured_predict(params, chat(y, q, noise_var), y)

    def nn_method(method: str, mode: QMode):
        q, params = structured(mode)
        trained = _train_network(ctx, method, point, params, q)
        return network.predict(trained, chat(y, q, noise_var), y)

    predictors: Dict[str, Callable[[], np.ndarray]] = {
        "lmmse-perfect": lmmse_perfect,
        "lmmse-sp": lambda: _per_realization(ctx, "cov_sp", y, noise_var),
        "lmmse-jakes": lambda: lmmse_predict_direct(
            jakes_covariance(spec, M + l), M, l, noise_var, y
        ),
        "gridded": gridded,
    }
    for suffix, mode in MODES.items():
        predictors[f"structured-{suffix}"] = functools.partial(structured_method, mode)
        predictors[f"nn-{suffix}"] = functools.partial(nn_method, f"nn-{suffix}", mode)

    rows = []
    for method in cfg.methods:
        error = nmse(target, np.asarray(predictors[method]()))
        logger.info(f"{method} at {point.snr_db:g} dB: NMSE {error:.6g}")
        rows.append((point.snr_db, method, error, cfg.seed))

    return rows


def run_predict(cfg: ExperimentConfig, use_cache: Optional[bool] = None) -> pd.DataFrame:
    """
    Runs the prediction sweep and returns its result table, one row per SNR point and
    method in configuration order.
    """
    cfg.validate()
    train, test = prepare_predict_data(cfg)
    cache = ModelCache.for_config(cfg, use_cache)
    ctx = PredictContext(cfg=cfg, train=train, test=test, cache=cache)

    points = snr_points(cfg)
    per_point = run_sweep(functools.partial(evaluate_predict_point, ctx), points, cfg.workers)
    return results_frame(row for rows in per_point for row in rows)
