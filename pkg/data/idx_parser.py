"""Reader for the IDX image/label format, plain or gzip-compressed.

Header (big-endian)::

    i32   magic   0x00000803 images, 0x00000801 labels
    i32   count
    i32   rows, cols      (images only)
    u8[]  payload, row-major
"""
import gzip
import logging
import struct
from pathlib import Path
from typing import Tuple

import numpy as np

from .base import Dataset

logger = logging.getLogger(__name__)

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049


class IdxFormatError(ValueError):
    """Bad magic number, truncated payload or inconsistent counts."""


def _read_bytes(path: Path) -> bytes:
    path = Path(path)
    with open(path, "rb") as f:
        head = f.read(2)
    opener = gzip.open if head == b"\x1f\x8b" else open
    with opener(path, "rb") as f:
        return f.read()


def _header(raw: bytes, path: Path, magic: int, n_dims: int) -> Tuple[int, ...]:
    size = 4 * (1 + n_dims)
    if len(raw) < size:
        raise IdxFormatError(f"{path}: header needs {size} bytes, file has {len(raw)}")
    found, *dims = struct.unpack_from(f">{1 + n_dims}i", raw, 0)
    if found != magic:
        raise IdxFormatError(f"{path}: magic number mismatch (expected {magic:#010x}, got {found:#010x})")
    return tuple(dims)


def _payload(raw: bytes, path: Path, offset: int, shape: Tuple[int, ...]) -> np.ndarray:
    expected = int(np.prod(shape, dtype=np.int64))
    actual = len(raw) - offset
    if actual < expected:
        raise IdxFormatError(f"{path}: truncated payload, expected {expected} bytes, got {actual}")
    return np.frombuffer(raw, dtype=np.uint8, count=expected, offset=offset).reshape(shape)


def load_idx_images(path: Path) -> np.ndarray:
    raw = _read_bytes(path)
    count, rows, cols = _header(raw, path, IMAGE_MAGIC, 3)
    return _payload(raw, path, 16, (count, rows, cols))


def load_idx_labels(path: Path) -> np.ndarray:
    raw = _read_bytes(path)
    (count,) = _header(raw, path, LABEL_MAGIC, 1)
    return _payload(raw, path, 8, (count,))


def load_idx(images_path: Path, labels_path: Path, n_classes: int = 10,
             name: str = "idx", flip_allowed: bool = False) -> Dataset:
    """Images scaled to [0, 1] as ``(N, H, W)`` floats with integer labels."""
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise IdxFormatError(
            f"count mismatch: {images.shape[0]} images in {images_path}, {labels.shape[0]} labels in {labels_path}")
    logger.info("loaded %d images of %dx%d from %s", images.shape[0], images.shape[1], images.shape[2], images_path)
    return Dataset(images.astype(np.float64) / 255.0, labels.astype(np.int64), n_classes, name, flip_allowed)


def write_idx(images_path: Path, labels_path: Path, images: np.ndarray, labels: np.ndarray,
              compress: bool = False) -> None:
    """Write uint8 images and labels in IDX layout (fixtures, conversions)."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    opener = gzip.open if compress else open
    with opener(images_path, "wb") as f:
        f.write(struct.pack(">4i", IMAGE_MAGIC, *images.shape))
        f.write(images.tobytes())
    with opener(labels_path, "wb") as f:
        f.write(struct.pack(">2i", LABEL_MAGIC, labels.shape[0]))
        f.write(labels.tobytes())
