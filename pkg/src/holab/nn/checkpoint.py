"""Model checkpoint file format.

Layout: magic `HOLAB`, u32 version, length-prefixed UTF-8 architecture
descriptor, u32 tensor count, then per tensor a length-prefixed name and
u32 shape list; payload is the little-endian 64-bit arrays in declaration
order.
"""

from __future__ import annotations

import struct

import numpy as np

from holab.errors import DataError

MAGIC = b"HOLAB"
VERSION = 1


def save_checkpoint(path: str, descriptor: str, tensors: list[tuple[str, np.ndarray]]) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        desc = descriptor.encode("utf-8")
        fh.write(struct.pack("<I", len(desc)))
        fh.write(desc)
        fh.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors:
            nb = name.encode("utf-8")
            fh.write(struct.pack("<I", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<I", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<I", dim))
        for _, arr in tensors:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _read(fh, count: int, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise DataError(f"truncated checkpoint while reading {what}")
    return data


def load_checkpoint(path: str) -> tuple[str, list[tuple[str, np.ndarray]]]:
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise DataError(f"cannot open checkpoint {path}: {exc}") from exc
    with fh:
        if _read(fh, 5, "magic") != MAGIC:
            raise DataError(f"{path}: bad magic; not a model checkpoint")
        (version,) = struct.unpack("<I", _read(fh, 4, "version"))
        if version != VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {version}")
        (dlen,) = struct.unpack("<I", _read(fh, 4, "descriptor length"))
        descriptor = _read(fh, dlen, "descriptor").decode("utf-8")
        (count,) = struct.unpack("<I", _read(fh, 4, "tensor count"))
        shapes: list[tuple[str, tuple[int, ...]]] = []
        for _ in range(count):
            (nlen,) = struct.unpack("<I", _read(fh, 4, "tensor name length"))
            name = _read(fh, nlen, "tensor name").decode("utf-8")
            (ndim,) = struct.unpack("<I", _read(fh, 4, "tensor rank"))
            shape = tuple(struct.unpack("<I", _read(fh, 4, "tensor dim"))[0]
                          for _ in range(ndim))
            shapes.append((name, shape))
        tensors = []
        for name, shape in shapes:
            size = int(np.prod(shape, dtype=np.int64)) if shape else 1
            raw = _read(fh, 8 * size, f"tensor {name}")
            tensors.append((name, np.frombuffer(raw, dtype="<f8").reshape(shape).copy()))
        if fh.read(1):
            raise DataError(f"{path}: trailing bytes after checkpoint payload")
    return descriptor, tensors
