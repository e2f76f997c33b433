"""Single-file binary checkpoint.

Layout, little-endian throughout:

    magic "MTLC" | u16 format version | u32 config length | config UTF-8 |
    repeated { u16 name length | name UTF-8 | u8 rank | u32 dims... |
               float32 row-major payload } |
    u32 CRC32 of all prior bytes

Weights are stored as float32 (half the size); reloading then evaluating
uses exactly the stored values, so predictions from a checkpoint are
reproducible even though resumed training differs from an uninterrupted
float64 run.
"""

from __future__ import annotations

import os
import struct
import zlib
from typing import Mapping

import numpy as np

from .errors import ContractError, CorruptArtifactError
from .numcore import Tensor

MAGIC = b"MTLC"
FORMAT_VERSION = 1


def _tensor_bytes(name: str, data: np.ndarray) -> bytes:
    encoded = name.encode("utf-8")
    if len(encoded) > 0xFFFF:
        raise ContractError(f"tensor name too long: {name[:40]}...")
    if data.ndim > 0xFF:
        raise ContractError(f"tensor rank {data.ndim} exceeds format limit")
    parts = [struct.pack("<H", len(encoded)), encoded, struct.pack("<B", data.ndim)]
    parts.append(struct.pack(f"<{data.ndim}I", *data.shape))
    parts.append(np.ascontiguousarray(data, dtype="<f4").tobytes())
    return b"".join(parts)


def serialize(config_text: str, params: Mapping[str, "Tensor | np.ndarray"]) -> bytes:
    config_bytes = config_text.encode("utf-8")
    parts = [MAGIC, struct.pack("<H", FORMAT_VERSION), struct.pack("<I", len(config_bytes)), config_bytes]
    for name in sorted(params):
        value = params[name]
        data = value.data if isinstance(value, Tensor) else np.asarray(value)
        parts.append(_tensor_bytes(name, data))
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def deserialize(blob: bytes) -> tuple[str, dict[str, np.ndarray]]:
    """Parse and validate a checkpoint; tensors come back as float64."""
    if len(blob) < len(MAGIC) + 2 + 4 + 4:
        raise CorruptArtifactError("checkpoint truncated: too short for header and CRC")
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) != crc:
        raise CorruptArtifactError("checkpoint CRC mismatch: file is corrupt or truncated")
    if body[:4] != MAGIC:
        raise CorruptArtifactError(f"bad magic bytes {body[:4]!r}, expected {MAGIC!r}")
    offset = 4
    (version,) = struct.unpack_from("<H", body, offset)
    offset += 2
    if version != FORMAT_VERSION:
        raise CorruptArtifactError(f"unsupported checkpoint format version {version}")
    (config_len,) = struct.unpack_from("<I", body, offset)
    offset += 4
    if offset + config_len > len(body):
        raise CorruptArtifactError("checkpoint truncated inside the config block")
    config_text = body[offset : offset + config_len].decode("utf-8")
    offset += config_len

    params: dict[str, np.ndarray] = {}
    while offset < len(body):
        try:
            (name_len,) = struct.unpack_from("<H", body, offset)
            offset += 2
            name = body[offset : offset + name_len].decode("utf-8")
            offset += name_len
            (rank,) = struct.unpack_from("<B", body, offset)
            offset += 1
            dims = struct.unpack_from(f"<{rank}I", body, offset)
            offset += 4 * rank
            count = int(np.prod(dims)) if rank else 1
            payload = np.frombuffer(body, dtype="<f4", count=count, offset=offset)
            offset += 4 * count
        except (struct.error, ValueError) as err:
            raise CorruptArtifactError(f"checkpoint tensor table is malformed: {err}") from None
        if name in params:
            raise CorruptArtifactError(f"duplicate tensor {name!r} in checkpoint")
        params[name] = payload.astype(np.float64).reshape(dims)
    return config_text, params


def save_checkpoint(path: str, config_text: str, params: Mapping[str, "Tensor | np.ndarray"]) -> None:
    """Atomic write: serialize to a temp file, then rename into place."""
    blob = serialize(config_text, params)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def load_checkpoint(path: str) -> tuple[str, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        blob = fh.read()
    return deserialize(blob)
