"""InfoNCE-style contrastive losses over score matrices and latent pairs."""
import logging
import numpy as np
from dataclasses import dataclass
from enum import Enum

from mi.densities import cosine_scores
from nn import functional as F
from nn.tensor import Tensor, as_tensor
from .base import LatentPairBatch

logger = logging.getLogger(__name__)


class DenominatorAxis(str, Enum):
    # Average over targets for a fixed anchor (rows).
    OVER_TARGETS = "over_targets"
    # Average over anchors for a fixed target (columns).
    OVER_SOURCES = "over_sources"


@dataclass
class LatentLossResult:
    loss: Tensor
    degenerate: bool = False
    n_skipped: int = 0


def loss_infonce(scores: Tensor, axis: DenominatorAxis = DenominatorAxis.OVER_TARGETS,
                 scale: float = 1.0) -> Tensor:
    """``-mean_i [s_ii - log mean_j e^{s_ij}]`` with the mean over rows or columns.

    The diagonal holds the positive pairs. Because the positive term is one
    of the averaged terms, the loss is never below ``-log N``.
    """
    scores = as_tensor(scores)
    if scores.ndim != 2 or scores.shape[0] != scores.shape[1]:
        raise ValueError(f"InfoNCE needs a square score matrix, got shape {scores.shape}")
    n = scores.shape[0]
    if scale != 1.0:
        scores = scores * scale
    reduce_axis = 1 if DenominatorAxis(axis) == DenominatorAxis.OVER_TARGETS else 0
    diagonal = scores[np.arange(n), np.arange(n)]
    log_denominator = F.logsumexp(scores, axis=reduce_axis) - np.log(n)
    return (log_denominator - diagonal).mean()


def loss_twin_nce(scores: Tensor, scale: float = 1.0) -> Tensor:
    """Self-normalised twin variant: the denominator averages over sources."""
    return loss_infonce(scores, DenominatorAxis.OVER_SOURCES, scale)


def loss_latent_pairs(pairs: LatentPairBatch, scale: float = 1.0) -> Tensor:
    return loss_infonce(cosine_scores(pairs.anchors, pairs.targets), DenominatorAxis.OVER_TARGETS, scale)


def loss_latent_supervised(latents: Tensor, labels: np.ndarray, rng: np.random.Generator,
                           scale: float = 1.0) -> LatentLossResult:
    """Contrast each latent against a random other member of its own class.

    Every row of the batch, detached, is a candidate target: the partner is
    the positive and all remaining rows are negatives. Anchors whose class
    has a single member in the batch are skipped as anchors but still serve
    as negatives for the others.
    """
    latents = as_tensor(latents)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if latents.ndim != 2 or latents.shape[0] != labels.shape[0]:
        raise ValueError(f"{labels.shape[0]} labels for latents of shape {latents.shape}")

    anchors, partners = [], []
    for i, label in enumerate(labels):
        candidates = np.flatnonzero(labels == label)
        candidates = candidates[candidates != i]
        if candidates.size == 0:
            continue
        anchors.append(i)
        partners.append(int(rng.choice(candidates)))

    n = labels.shape[0]
    n_skipped = n - len(anchors)
    if not anchors:
        logger.debug("degenerate latent batch: every class is a singleton")
        return LatentLossResult(Tensor(np.zeros((), dtype=latents.dtype)), degenerate=True, n_skipped=n_skipped)

    scores = cosine_scores(latents[np.array(anchors)], latents.detach())
    if scale != 1.0:
        scores = scores * scale
    positive = scores[np.arange(len(anchors)), np.array(partners)]
    log_denominator = F.logsumexp(scores, axis=1) - np.log(n)
    return LatentLossResult((log_denominator - positive).mean(), degenerate=False, n_skipped=n_skipped)


def loss_latent_augment(anchors: Tensor, augmented: Tensor, scale: float = 1.0) -> Tensor:
    """InfoNCE between latents and the detached latents of their augmentations."""
    return loss_latent_pairs(LatentPairBatch(anchors, augmented), scale)
