from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """Images (or feature vectors) with integer labels.

    ``images`` is ``(N, H, W)`` for image data and ``(N, D)`` for vector data.
    """

    images: np.ndarray
    labels: np.ndarray
    n_classes: int
    name: str = ""
    flip_allowed: bool = False

    def __post_init__(self):
        images = np.array(self.images, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        if images.shape[0] != labels.shape[0]:
            raise ValueError(f"{images.shape[0]} samples but {labels.shape[0]} labels")
        if labels.size and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise ValueError(f"labels outside [0, {self.n_classes})")
        images.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def is_image(self) -> bool:
        return self.images.ndim == 3

    @property
    def sample_shape(self) -> Tuple[int, ...]:
        return self.images.shape[1:]

    @property
    def input_dim(self) -> int:
        return int(np.prod(self.sample_shape))

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.images[indices], self.labels[indices], self.n_classes,
                       self.name, self.flip_allowed)


@dataclass
class DatasetConfig:
    """Which benchmark to load and how to shape it."""

    kind: str = "blobs"
    n_classes: int = 10
    n_per_class: int = 1000
    test_per_class: int = 200
    dim: int = 2
    separation: float = 10.0
    seed: int = 0
    idx_dir: str = ""
    train_images: str = "train-images-idx3-ubyte.gz"
    train_labels: str = "train-labels-idx1-ubyte.gz"
    test_images: str = "t10k-images-idx3-ubyte.gz"
    test_labels: str = "t10k-labels-idx1-ubyte.gz"
    flip_allowed: bool = False
    limit: int = 0

    def __post_init__(self):
        if self.kind not in ("blobs", "idx"):
            raise ValueError(f"Unknown dataset kind: {self.kind}")
        if self.n_classes < 2:
            raise ValueError(f"dataset.n_classes must be at least 2, got {self.n_classes}")
        if self.n_per_class < 1 or self.test_per_class < 0 or self.dim < 1:
            raise ValueError("dataset sizes must be positive")
        if self.separation < 0:
            raise ValueError(f"dataset.separation must be non-negative, got {self.separation}")
        if self.limit < 0:
            raise ValueError(f"dataset.limit must be non-negative, got {self.limit}")


class BaseLoader(ABC):
    """Abstract base class for dataset loaders: returns a train and a test split."""

    def __init__(self, cfg: DatasetConfig):
        self.cfg = cfg

    @abstractmethod
    def load(self) -> Tuple[Dataset, Dataset]:
        pass


class BlobsLoader(BaseLoader):
    def load(self) -> Tuple[Dataset, Dataset]:
        from .blobs import gen_blobs, gen_blobs_test
        c = self.cfg
        train = gen_blobs(c.n_classes, c.n_per_class, c.dim, c.separation, c.seed)
        test = gen_blobs_test(c.n_classes, max(c.test_per_class, 1), c.dim, c.separation, c.seed)
        return train, test


class IdxLoader(BaseLoader):
    def __init__(self, cfg: DatasetConfig, idx_dir: Optional[Path] = None):
        super().__init__(cfg)
        self.idx_dir = Path(cfg.idx_dir) if cfg.idx_dir else (Path(idx_dir) if idx_dir else None)
        if self.idx_dir is None:
            raise ValueError("no IDX directory configured (dataset.idx_dir or MITURBO_IDX_DIR)")

    def load(self) -> Tuple[Dataset, Dataset]:
        from .idx_parser import load_idx
        c = self.cfg
        train = load_idx(self.idx_dir / c.train_images, self.idx_dir / c.train_labels,
                         n_classes=c.n_classes, name="idx-train", flip_allowed=c.flip_allowed)
        test = load_idx(self.idx_dir / c.test_images, self.idx_dir / c.test_labels,
                        n_classes=c.n_classes, name="idx-test", flip_allowed=c.flip_allowed)
        if c.limit:
            train = train.subset(np.arange(min(c.limit, len(train))))
        return train, test


def get_loader(cfg: DatasetConfig, idx_dir: Optional[Path] = None) -> BaseLoader:
    if cfg.kind == "blobs":
        return BlobsLoader(cfg)
    elif cfg.kind == "idx":
        return IdxLoader(cfg, idx_dir)
    else:
        raise ValueError(f"Unknown dataset kind: {cfg.kind}")
