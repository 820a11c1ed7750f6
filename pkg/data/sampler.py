"""Dual labelled/unlabelled sampling.

Every training step draws an unlabelled batch from the whole dataset with
labels stripped and, in parallel, a labelled batch from a small stratified
subset. The labelled subset is sampled with replacement so it keeps pace
with the unlabelled stream however small it is.
"""
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .base import Dataset

LABELLED_BATCH_CAP = 128


@dataclass(frozen=True)
class LabelledSubset:
    indices: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __len__(self) -> int:
        return self.indices.shape[0]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def frequencies(self) -> np.ndarray:
        counts = self.class_counts().astype(np.float64)
        return counts / counts.sum()


@dataclass(frozen=True)
class DualBatch:
    labelled_images: np.ndarray
    labels: np.ndarray
    unlabelled_images: np.ndarray

    @property
    def n_labelled(self) -> int:
        return self.labels.shape[0]

    @property
    def n_unlabelled(self) -> int:
        return self.unlabelled_images.shape[0]


@dataclass
class DualRng:
    """Independent generator states for the two streams."""

    labelled: np.random.Generator
    unlabelled: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "DualRng":
        labelled, unlabelled = np.random.SeedSequence(seed).spawn(2)
        return cls(np.random.default_rng(labelled), np.random.default_rng(unlabelled))


def stratified_subset(dataset: Dataset, size: int, rng: np.random.Generator) -> LabelledSubset:
    """Pick ``size`` labelled indices with per-class counts differing by at most one."""
    if size < 1:
        raise ValueError(f"subset size must be positive, got {size}")
    c = dataset.n_classes
    quota = np.full(c, size // c)
    quota[rng.permutation(c)[: size % c]] += 1
    chosen = []
    for label in range(c):
        members = np.flatnonzero(dataset.labels == label)
        if members.size < quota[label]:
            raise ValueError(f"class {label} has {members.size} samples, {quota[label]} requested")
        chosen.append(rng.choice(members, size=quota[label], replace=False))
    indices = np.sort(np.concatenate(chosen)).astype(np.int64)
    return LabelledSubset(indices, dataset.labels[indices].copy(), c)


def _labelled_part(dataset: Dataset, subset: LabelledSubset, n_l: int, rng: np.random.Generator):
    if len(subset) == 0:
        raise ValueError("the labelled subset is empty")
    picks = subset.indices[rng.integers(0, len(subset), size=n_l)]
    return dataset.images[picks], dataset.labels[picks].copy()


def sample_dual(dataset: Dataset, subset: LabelledSubset, n_l: int, n_u: int, rng: DualRng) -> DualBatch:
    """One step's batches: labelled with replacement, unlabelled without."""
    if n_l < 1 or n_u < 1:
        raise ValueError(f"batch sizes must be positive, got n_l={n_l}, n_u={n_u}")
    images_l, labels_l = _labelled_part(dataset, subset, n_l, rng.labelled)
    unlabelled = rng.unlabelled.choice(len(dataset), size=min(n_u, len(dataset)), replace=False)
    return DualBatch(images_l, labels_l, dataset.images[unlabelled])


class DualSampler:
    """Epoch iterator: one pass over a fresh permutation of the unlabelled data."""

    def __init__(self, dataset: Dataset, subset: LabelledSubset, batch_size: int,
                 seed: int, labelled_batch: Optional[int] = None):
        if batch_size < 1:
            raise ValueError(f"batch size must be positive, got {batch_size}")
        if len(subset) == 0:
            raise ValueError("the labelled subset is empty")
        self.dataset = dataset
        self.subset = subset
        self.batch_size = batch_size
        self.labelled_batch = labelled_batch or min(len(subset), LABELLED_BATCH_CAP)
        self.rng = DualRng.from_seed(seed)

    def steps_per_epoch(self) -> int:
        return -(-len(self.dataset) // self.batch_size)

    def epoch(self) -> Iterator[DualBatch]:
        order = self.rng.unlabelled.permutation(len(self.dataset))
        for start in range(0, order.size, self.batch_size):
            batch_idx = order[start:start + self.batch_size]
            images_l, labels_l = _labelled_part(self.dataset, self.subset, self.labelled_batch, self.rng.labelled)
            yield DualBatch(images_l, labels_l, self.dataset.images[batch_idx])
