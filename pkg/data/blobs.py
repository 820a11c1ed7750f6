"""Synthetic Gaussian-blob benchmark.

Class centres depend only on ``(n_classes, dim, separation)``; the seed only
drives the sampled points. Neighbouring centres are exactly ``separation``
apart, every cluster has identity covariance.
"""
import numpy as np

from .base import Dataset

TEST_STREAM = 1


def blob_centres(n_classes: int, dim: int, separation: float) -> np.ndarray:
    if separation < 0:
        raise ValueError(f"separation must be non-negative, got {separation}")
    if n_classes < 1 or dim < 1:
        raise ValueError(f"need positive n_classes and dim, got {n_classes}, {dim}")
    centres = np.zeros((n_classes, dim))
    if dim >= n_classes:
        # scaled one-hots: every pair is separation apart
        centres[np.arange(n_classes), np.arange(n_classes)] = separation / np.sqrt(2.0)
    elif dim >= 2:
        radius = separation / (2.0 * np.sin(np.pi / n_classes))
        angles = 2.0 * np.pi * np.arange(n_classes) / n_classes
        centres[:, 0] = radius * np.cos(angles)
        centres[:, 1] = radius * np.sin(angles)
    else:
        centres[:, 0] = separation * np.arange(n_classes)
    return centres


def _sample(rng: np.random.Generator, n_classes: int, n_per_class: int, dim: int,
            separation: float, name: str) -> Dataset:
    centres = blob_centres(n_classes, dim, separation)
    labels = np.repeat(np.arange(n_classes), n_per_class)
    order = rng.permutation(labels.size)
    labels = labels[order]
    points = centres[labels] + rng.standard_normal((labels.size, dim))
    return Dataset(points, labels, n_classes, name=name, flip_allowed=False)


def gen_blobs(n_classes: int, n_per_class: int, dim: int, separation: float, seed: int) -> Dataset:
    """``n_classes * n_per_class`` points, deterministic per seed."""
    return _sample(np.random.default_rng(seed), n_classes, n_per_class, dim, separation, "blobs")


def gen_blobs_test(n_classes: int, n_per_class: int, dim: int, separation: float, seed: int) -> Dataset:
    """Held-out points around the same centres, drawn from a stream derived from ``seed``."""
    rng = np.random.default_rng([seed, TEST_STREAM])
    return _sample(rng, n_classes, n_per_class, dim, separation, "blobs-test")
