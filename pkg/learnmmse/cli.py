"""
Command line entry point::

    learnmmse predict  [--config FILE] [--seed N] [--out CSV] [--snr DB ...] [--set KEY=VALUE ...]
    learnmmse estimate [...same options...]
    learnmmse gen {predict,estimate} --count N --out FILE [--config FILE] [--seed N]
    learnmmse --print-default-config [predict|estimate]
"""
from typing import List, Optional, Tuple

import argparse
import json
import sys
from pathlib import Path

from loguru import logger

from .collections import parse_override
from .config import TASKS, ExperimentConfig, load_config, load_default_tree
from .dataset import save_channels, synthesize_cluster_channels, synthesize_trajectories
from .errors import ConfigurationError, InvalidArgumentError, LearnMMSEError
from .experiment import emit_results, run_estimate, run_predict
from .experiment.run import Stream
from .utils import derive_seed
from .version import __version__

__all__ = ("build_parser", "setup_logging", "main")

VERBOSITY = {0: None, 1: "INFO"}


def setup_logging(level: str = "WARNING", log_file: Optional[str] = None):
    logger.remove()
    logger.add(sys.stderr, format="{time} {level} {message}", level=level)
    if log_file:
        logger.add(log_file)


def _add_config_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=Path, help="JSON configuration layered over the defaults")
    parser.add_argument("--seed", type=int, help="experiment seed")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one configuration value, e.g. train.epochs=5",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="learnmmse", description="MMSE channel estimation and prediction experiments."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--print-default-config",
        nargs="?",
        const="predict",
        choices=TASKS,
        metavar="TASK",
        help="print the default configuration of a task and exit",
    )
    subparsers = parser.add_subparsers(dest="command")

    for task in TASKS:
        sub = subparsers.add_parser(task, help=f"run the {task} experiment")
        _add_config_arguments(sub)
        sub.add_argument("--out", help="result CSV")
        sub.add_argument("--snr", type=float, action="append", help="SNR point in dB")
        sub.add_argument("--workers", type=int, help="parallel SNR points")
        sub.add_argument("--no-cache", action="store_true", help="neither read nor write models")

    gen = subparsers.add_parser("gen", help="write synthetic channels to a channel file")
    gen.add_argument("task", choices=TASKS)
    gen.add_argument("--count", type=int, required=True, help="number of rows")
    gen.add_argument("--out", type=Path, required=True, help="channel file to write")
    _add_config_arguments(gen)

    return parser


def _overrides(args: argparse.Namespace) -> List[Tuple[str, object]]:
    overrides = [parse_override(expression) for expression in args.set]
    if args.seed is not None:
        overrides.append(("seed", args.seed))
    if getattr(args, "out", None) is not None and args.command != "gen":
        overrides.append(("output", args.out))
    if getattr(args, "snr", None):
        overrides.append(("snr.values", args.snr))
    if getattr(args, "workers", None) is not None:
        overrides.append(("workers", args.workers))
    return overrides


def _configure(args: argparse.Namespace, task: str) -> ExperimentConfig:
    cfg = load_config(args.config, task=task, overrides=_overrides(args))
    setup_logging(VERBOSITY.get(args.verbose, "DEBUG") or cfg.logging.level, cfg.logging.file)
    return cfg


def _run_experiment(args: argparse.Namespace) -> int:
    cfg = _configure(args, args.command)
    runner = run_predict if cfg.task == "predict" else run_estimate
    table = runner(cfg, use_cache=False if args.no_cache else None)

    emit_results(table, cfg.output, metadata={"version": __version__, "config": cfg.to_dict()})
    return 0


def _generate(args: argparse.Namespace) -> int:
    if args.count < 0:
        raise InvalidArgumentError(f"--count must be non-negative, got {args.count}")

    cfg = _configure(args, args.task)
    seed = derive_seed(cfg.seed, Stream.DATA)
    if cfg.task == "predict":
        items = synthesize_trajectories(
            args.count, cfg.M, cfg.l, cfg.doppler_spec(), cfg.channel.paths, seed=seed
        )
        channels = items["block"]
    else:
        channels = synthesize_cluster_channels(
            args.count, cfg.M, cfg.array.cluster_spread_deg, cfg.array.subpaths, seed=seed
        )

    save_channels(args.out, channels)
    logger.info(f"Wrote {channels.shape[0]}x{channels.shape[1]} channel file {args.out}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.print_default_config is not None:
        print(json.dumps(load_default_tree(args.print_default_config), indent=2))
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2

    try:
        return _generate(args) if args.command == "gen" else _run_experiment(args)
    except ConfigurationError as e:
        print(f"learnmmse: error: {' '.join(str(e).split())}", file=sys.stderr)
        return 2
    except (LearnMMSEError, OSError) as e:
        print(f"learnmmse: error: {' '.join(str(e).split())}", file=sys.stderr)
        return 1
