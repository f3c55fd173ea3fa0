"""Binary tensor container shared by checkpoints and datasets.

Layout (little-endian): b"TPNT", uint32 version, uint32 tensor count, then
per tensor: uint16 name length, UTF-8 name, uint8 rank, uint32 per dim and a
float32 payload.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

MAGIC = b"TPNT"
VERSION = 1


class ContainerError(ValueError):
    pass


def write_container(path, tensors: dict) -> None:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<II", VERSION, len(tensors)))
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype="<f4")
        arr = np.ascontiguousarray(arr).reshape(arr.shape)
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ContainerError(f"tensor name too long: {name[:40]}...")
        buf.write(struct.pack("<H", len(raw)))
        buf.write(raw)
        buf.write(struct.pack("<B", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        buf.write(arr.tobytes())
    Path(path).write_bytes(buf.getvalue())


def read_container(path) -> dict:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ContainerError(f"{path}: not a TPNT container")
    version, count = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise ContainerError(f"{path}: unsupported container version {version}")
    off = 12
    out = {}
    try:
        for _ in range(count):
            (nlen,) = struct.unpack_from("<H", data, off)
            off += 2
            name = data[off:off + nlen].decode("utf-8")
            off += nlen
            (rank,) = struct.unpack_from("<B", data, off)
            off += 1
            dims = struct.unpack_from(f"<{rank}I", data, off)
            off += 4 * rank
            size = int(np.prod(dims)) if rank else 1
            arr = np.frombuffer(data, dtype="<f4", count=size, offset=off).reshape(dims)
            off += 4 * size
            out[name] = arr.astype(np.float32)
    except (struct.error, ValueError) as exc:
        raise ContainerError(f"{path}: truncated or corrupt container") from exc
    if off != len(data):
        raise ContainerError(f"{path}: trailing bytes after {count} tensors")
    return out
