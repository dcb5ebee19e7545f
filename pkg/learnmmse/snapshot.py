"""
Trained parameter snapshots.

Layout, all little-endian::

    offset  size  field
    0       4     magic "LMSN"
    4       2     format version (u16), currently 1
    6       2     kind (u16): 1 neural network predictor, 2 CNN estimator
    8       4     M (u32)
    12      4     K (u32)
    16      4     N_grid (u32)
    20      ...   parameter blocks as f8 in row-major order

Neural network blocks are A1 (N_grid x K), b1 (N_grid), A2 (2M x N_grid), b2 (2M);
CNN blocks are a1, a2, b1, b2, each of length K.
"""
from typing import Dict, List, Tuple, Union

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadMagicError, InvalidArgumentError, TruncatedPayloadError, VersionMismatchError
from .estimators.cnn import CNNParams
from .predictors.network import NNParams

__all__ = (
    "SnapshotKind",
    "Snapshot",
    "encode_snapshot",
    "decode_snapshot",
    "save_snapshot",
    "load_snapshot",
)

MAGIC = b"LMSN"
FORMAT_VERSION = 1

HEADER_DTYPE = np.dtype(
    [
        ("magic", "S4"),
        ("version", "<u2"),
        ("kind", "<u2"),
        ("M", "<u4"),
        ("K", "<u4"),
        ("n_grid", "<u4"),
    ]
)
BLOCK_DTYPE = np.dtype("<f8")


class SnapshotKind(int, enum.Enum):
    NETWORK = 1
    CNN = 2


@dataclass(frozen=True)
class Snapshot:
    kind: SnapshotKind
    M: int
    K: int
    n_grid: int
    params: Union[NNParams, CNNParams]


def _block_shapes(kind: SnapshotKind, M: int, K: int, n_grid: int) -> Dict[str, Tuple[int, ...]]:
    if kind is SnapshotKind.NETWORK:
        return {"A1": (n_grid, K), "b1": (n_grid,), "A2": (2 * M, n_grid), "b2": (2 * M,)}

    return {"a1": (K,), "a2": (K,), "b1": (K,), "b2": (K,)}


def encode_snapshot(params: Union[NNParams, CNNParams], M: int) -> bytes:
    if isinstance(params, NNParams):
        kind, K, n_grid = SnapshotKind.NETWORK, params.K, params.n_grid
        if params.M != M:
            raise InvalidArgumentError(f"network predicts from M={params.M}, not {M}")
    elif isinstance(params, CNNParams):
        kind, K, n_grid = SnapshotKind.CNN, params.K, params.K
    else:
        raise InvalidArgumentError(f"cannot snapshot {type(params).__name__}")

    header = np.zeros(1, dtype=HEADER_DTYPE)
    header["magic"] = MAGIC
    header["version"] = FORMAT_VERSION
    header["kind"] = kind.value
    header["M"], header["K"], header["n_grid"] = M, K, n_grid

    blocks: List[bytes] = [header.tobytes()]
    arrays = params.arrays()
    for name in _block_shapes(kind, M, K, n_grid):
        blocks.append(np.ascontiguousarray(arrays[name], dtype=BLOCK_DTYPE).tobytes())

    return b"".join(blocks)


def decode_snapshot(data: bytes) -> Snapshot:
    if data[:4] != MAGIC:
        raise BadMagicError(f"expected magic {MAGIC!r}, found {data[:4]!r}", offset=0)
    if len(data) < HEADER_DTYPE.itemsize:
        raise TruncatedPayloadError("header ends early", offset=len(data))

    header = np.frombuffer(data, dtype=HEADER_DTYPE, count=1)[0]
    if int(header["version"]) != FORMAT_VERSION:
        raise VersionMismatchError(
            f"snapshot version {int(header['version'])} is not supported", offset=4
        )
    try:
        kind = SnapshotKind(int(header["kind"]))
    except ValueError:
        raise VersionMismatchError(f"unknown snapshot kind {int(header['kind'])}", offset=6)

    M, K, n_grid = int(header["M"]), int(header["K"]), int(header["n_grid"])
    shapes = _block_shapes(kind, M, K, n_grid)

    expected = HEADER_DTYPE.itemsize + BLOCK_DTYPE.itemsize * sum(
        int(np.prod(shape)) for shape in shapes.values()
    )
    if len(data) != expected:
        raise TruncatedPayloadError(
            f"snapshot holds {len(data)} bytes, header promises {expected}",
            offset=min(len(data), expected),
        )

    offset = HEADER_DTYPE.itemsize
    arrays = {}
    for name, shape in shapes.items():
        count = int(np.prod(shape))
        block = np.frombuffer(data, dtype=BLOCK_DTYPE, count=count, offset=offset)
        arrays[name] = block.reshape(shape).astype(float)
        offset += count * BLOCK_DTYPE.itemsize

    params_cls = NNParams if kind is SnapshotKind.NETWORK else CNNParams
    return Snapshot(kind=kind, M=M, K=K, n_grid=n_grid, params=params_cls(**arrays))


def save_snapshot(path: Union[str, Path], params: Union[NNParams, CNNParams], M: int) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_snapshot(params, M))
    return path


def load_snapshot(path: Union[str, Path]) -> Snapshot:
    return decode_snapshot(Path(path).read_bytes())
