"""
Binary container for exported channel vectors.

Layout, all little-endian::

    offset  size  field
    0       4     magic "CHN1"
    4       2     format version (u16), currently 1
    6       4     count (u32)
    10      4     dim (u32)
    14      16*count*dim  payload, complex128 (real f64, imag f64) pairs, row-major
"""
from typing import Union

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from loguru import logger

from ..errors import (
    BadMagicError,
    InvalidArgumentError,
    TruncatedPayloadError,
    VersionMismatchError,
)

__all__ = (
    "MAGIC",
    "FORMAT_VERSION",
    "HEADER_DTYPE",
    "ChannelFileHeader",
    "read_header",
    "load_channels",
    "save_channels",
)

MAGIC = b"CHN1"
FORMAT_VERSION = 1

HEADER_DTYPE = np.dtype([("magic", "S4"), ("version", "<u2"), ("count", "<u4"), ("dim", "<u4")])
PAYLOAD_DTYPE = np.dtype("<c16")


@dataclass(frozen=True)
class ChannelFileHeader:
    version: int
    count: int
    dim: int

    @property
    def payload_bytes(self) -> int:
        return PAYLOAD_DTYPE.itemsize * self.count * self.dim


def _decode_header(data: bytes) -> ChannelFileHeader:
    if data[:4] != MAGIC:
        raise BadMagicError(f"expected magic {MAGIC!r}, found {data[:4]!r}", offset=0)
    if len(data) < HEADER_DTYPE.itemsize:
        raise TruncatedPayloadError("header ends early", offset=len(data))

    record = np.frombuffer(data, dtype=HEADER_DTYPE, count=1)[0]
    if int(record["version"]) != FORMAT_VERSION:
        raise VersionMismatchError(
            f"format version {int(record['version'])} is not supported "
            f"(expected {FORMAT_VERSION})",
            offset=4,
        )

    return ChannelFileHeader(
        version=int(record["version"]), count=int(record["count"]), dim=int(record["dim"])
    )


def read_header(path: Union[str, Path]) -> ChannelFileHeader:
    with open(path, "rb") as f:
        return _decode_header(f.read(HEADER_DTYPE.itemsize))


def load_channels(path: Union[str, Path]) -> np.ndarray:
    """
    Reads a channel file into a ``(count, dim)`` complex matrix.

    Raises:
        BadMagicError: The file does not start with the magic bytes.
        VersionMismatchError: The header names an unknown format version.
        TruncatedPayloadError: The payload length disagrees with the header.
    """
    data = Path(path).read_bytes()
    header = _decode_header(data)

    actual = len(data) - HEADER_DTYPE.itemsize
    if actual < header.payload_bytes:
        raise TruncatedPayloadError(
            f"payload holds {actual} bytes, header promises {header.payload_bytes}",
            offset=len(data),
        )
    if actual > header.payload_bytes:
        raise TruncatedPayloadError(
            f"{actual - header.payload_bytes} trailing bytes after the payload",
            offset=HEADER_DTYPE.itemsize + header.payload_bytes,
        )

    payload = np.frombuffer(
        data, dtype=PAYLOAD_DTYPE, count=header.count * header.dim, offset=HEADER_DTYPE.itemsize
    )
    logger.info(f"Loaded {header.count} channel vectors of dimension {header.dim} from {path}")
    return payload.reshape(header.count, header.dim).astype(complex)


def save_channels(path: Union[str, Path], channels: np.ndarray) -> Path:
    channels = np.asarray(channels)
    if channels.ndim != 2:
        raise InvalidArgumentError(f"expected a (count, dim) matrix, got shape {channels.shape}")

    header = np.zeros(1, dtype=HEADER_DTYPE)
    header["magic"] = MAGIC
    header["version"] = FORMAT_VERSION
    header["count"], header["dim"] = channels.shape

    path = Path(path)
    with open(str(path), "wb") as f:
        f.write(header.tobytes())
        f.write(np.ascontiguousarray(channels, dtype=PAYLOAD_DTYPE).tobytes())

    return path
