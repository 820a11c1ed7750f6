"""Binary parameter checkpoints.

Layout, all integers little-endian::

    b"MITC"                     magic
    u32   version (1)
    u32   number of tensors
    per tensor:
        u16   name length in bytes
        bytes UTF-8 name
        u8    ndim
        u32   dims[ndim]
        f64   values, row-major
"""
import struct
import numpy as np
from pathlib import Path
from typing import Dict

MAGIC = b"MITC"
VERSION = 1


def save_checkpoint(path: Path, tensors: Dict[str, np.ndarray]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(tensors)))
        for name, values in tensors.items():
            encoded = name.encode("utf-8")
            values = np.asarray(values)
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", values.ndim))
            f.write(struct.pack(f"<{values.ndim}I", *values.shape))
            f.write(np.ascontiguousarray(values, dtype="<f8").tobytes())
    return path


def load_checkpoint(path: Path) -> Dict[str, np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint file (magic {raw[:4]!r})")
    version, count = struct.unpack_from("<II", raw, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    offset = 12
    tensors = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", raw, offset)
        offset += 2
        name = raw[offset:offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<B", raw, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}I", raw, offset)
        offset += 4 * ndim
        n_bytes = 8 * int(np.prod(shape, dtype=np.int64))
        if offset + n_bytes > len(raw):
            raise ValueError(f"{path}: truncated tensor {name!r}")
        tensors[name] = np.frombuffer(raw, dtype="<f8", count=n_bytes // 8, offset=offset).reshape(shape).copy()
        offset += n_bytes
    return tensors
