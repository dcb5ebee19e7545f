from typing import Any, Union

import hashlib
import json
from pathlib import Path

import numpy as np

__all__ = (
    "LIB_ROOT",
    "SeedLike",
    "make_rng",
    "derive_seed",
    "stable_digest",
    "file_digest",
)

LIB_ROOT = Path(__file__).parent.absolute()

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed

    return np.random.default_rng(seed)


def derive_seed(*keys: int) -> int:
    """
    Mixes integer keys into a single 63 bit seed. Different key tuples give
    statistically independent streams, so every (seed, purpose, index) triple
    can own its own generator.

    Args:
        keys: Non-negative integers identifying the stream.

    Returns:
        A seed suitable for ``numpy.random.default_rng``.
    """
    state = np.random.SeedSequence([int(k) for k in keys]).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])


def stable_digest(payload: Any) -> str:
    encoded = json.dumps(payload, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(encoded).hexdigest()


def file_digest(path: Union[str, Path], chunk_size: int = 1 << 20) -> str:
    digest = hashlib.sha256()
    with open(str(path), "rb") as f:
        for chunk in iter(lambda: f.read(chunk_size), b""):
            digest.update(chunk)

    return digest.hexdigest()
