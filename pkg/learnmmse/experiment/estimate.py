"""
The estimation experiment: channel vectors of a uniform linear array observed in
white noise, estimated by the convolutional estimators and compared to ``h = y`` and
genie-aided OMP.
"""
from typing import Dict, List, Optional, Tuple

import functools
from dataclasses import dataclass, field, replace

import pandas as pd
from loguru import logger

from ..channel import add_awgn
from ..config import ExperimentConfig
from ..dataset import (
    ItemTable,
    TestStream,
    TrainStream,
    load_channels,
    normalize,
    split_and_batch,
    synthesize_cluster_channels,
)
from ..estimators import (
    CNNParams,
    Dictionary,
    NoisyEstimationBatches,
    NoLearnParams,
    build_spectral_grid,
    cnn_estimate,
    cnn_train,
    estimate_nolearn,
    genie_omp_batch,
    train_hierarchy,
)
from ..lmmse import nmse
from ..predictors.structured import QMode, make_q
from ..snapshot import SnapshotKind
from ..utils import derive_seed
from .run import ModelCache, Stream, SweepPoint, method_seed, run_sweep, snr_points
from .save import results_frame

__all__ = (
    "prepare_estimate_data",
    "evaluate_estimate_point",
    "train_cnn_hierarchies",
    "run_estimate",
)

MODES = {"circ": QMode.CIRCULANT, "toep": QMode.TOEPLITZ}


def prepare_estimate_data(cfg: ExperimentConfig) -> Tuple[TrainStream, TestStream]:
    M = cfg.M
    if cfg.is_synthetic:
        channels = synthesize_cluster_channels(
            cfg.split.n_train + cfg.split.n_test,
            M,
            spread_deg=cfg.array.cluster_spread_deg,
            subpaths=cfg.array.subpaths,
            seed=derive_seed(cfg.seed, Stream.DATA),
        )
    else:
        channels = normalize(load_channels(cfg.source), float(M))

    return split_and_batch(ItemTable({"channel": channels}), cfg.split)


@dataclass(frozen=True)
class EstimateContext:
    cfg: ExperimentConfig
    train: TrainStream
    test: TestStream
    cache: ModelCache
    pretrained: Dict[str, List[CNNParams]] = field(default_factory=dict)


def _cnn_methods(cfg: ExperimentConfig) -> List[str]:
    return [m for m in cfg.methods if m.startswith("cnn-")]


def train_cnn_hierarchies(
    cfg: ExperimentConfig, train: TrainStream, cache: ModelCache
) -> Dict[str, List[CNNParams]]:
    """
    Trains the warm started SNR chain of every CNN method, or loads it from the cache
    when every point of the chain is cached.
    """
    points = snr_points(cfg)
    chains = {}
    for method in _cnn_methods(cfg):
        cached = [cache.load(method, p, SnapshotKind.CNN, cfg.M) for p in points]
        if all(params is not None for params in cached):
            chains[method] = cached
            continue

        q = make_q(MODES[method.split("-")[1]], cfg.M)
        train_cfg = replace(cfg.train, seed=method_seed(cfg, method))
        logger.info(f"Training {method} over {len(points)} SNR points, high to low")
        chains[method] = train_hierarchy(train, q, [p.snr_db for p in points], train_cfg)

        for point, params in zip(points, chains[method]):
            cache.store(method, point, params, cfg.M)

    return chains


def _trained_cnn(ctx: EstimateContext, method: str, point: SweepPoint, q) -> CNNParams:
    if method in ctx.pretrained:
        return ctx.pretrained[method][point.index]

    cfg = ctx.cfg
    params = ctx.cache.load(method, point, SnapshotKind.CNN, cfg.M)
    if params is not None:
        return params

    noise_var = point.noise_var
    start = CNNParams.from_nolearn(
        NoLearnParams.from_grid(build_spectral_grid(cfg.M, q.mode, noise_var, q=q))
    )
    train_cfg = replace(cfg.train, seed=method_seed(cfg, method, point.index))
    data = NoisyEstimationBatches(ctx.train, noise_var, cfg.train.batch_size)
    params, _ = cnn_train(start, data, train_cfg, q)

    ctx.cache.store(method, point, params, cfg.M)
    return params


def evaluate_estimate_point(ctx: EstimateContext, point: SweepPoint) -> List[Tuple]:
    cfg = ctx.cfg
    M, noise_var = cfg.M, point.noise_var
    logger.info(f"Evaluating {len(cfg.methods)} estimators at {point.snr_db:g} dB")

    h = ctx.test.items["channel"]
    y = add_awgn(h, noise_var, point.noise_seed(cfg))

    rows = []
    for method in cfg.methods:
        if method == "identity":
            estimate = y
        elif method == "genie-omp":
            dictionary = Dictionary.steering(M, cfg.model.omp_oversampling)
            estimate, _ = genie_omp_batch(y, dictionary, h, cfg.omp_max_sparsity)
        else:
            kind, suffix = method.split("-")
            q = make_q(MODES[suffix], M)
            if kind == "nolearn":
                grid = build_spectral_grid(M, q.mode, noise_var, q=q)
                estimate = estimate_nolearn(NoLearnParams.from_grid(grid), q, y, noise_var)
            else:
                estimate = cnn_estimate(_trained_cnn(ctx, method, point, q), q, y, noise_var)

        error = nmse(h, estimate)
        logger.info(f"{method} at {point.snr_db:g} dB: NMSE {error:.6g}")
        rows.append((point.snr_db, method, error, cfg.seed))

    return rows


def run_estimate(cfg: ExperimentConfig, use_cache: Optional[bool] = None) -> pd.DataFrame:
    cfg.validate()
    train, test = prepare_estimate_data(cfg)
    cache = ModelCache.for_config(cfg, use_cache)

    pretrained = train_cnn_hierarchies(cfg, train, cache) if cfg.train.hierarchical else {}
    ctx = EstimateContext(cfg=cfg, train=train, test=test, cache=cache, pretrained=pretrained)

    per_point = run_sweep(
        functools.partial(evaluate_estimate_point, ctx), snr_points(cfg), cfg.workers
    )
    return results_frame(row for rows in per_point for row in rows)
