"""Supervised losses derived from the conditional-entropy and twin bounds."""
from typing import Optional

from mi.densities import (RescaleKind, log_binary_conditional_batch, log_conditional_batch,
                          log_marginal_batch)
from nn.tensor import Tensor
from .base import SupervisedBatch, SupervisedLoss


def loss_cat_cross(batch: SupervisedBatch, kind: RescaleKind) -> Tensor:
    """``-mean_i log sigma(f_i)_{y_i}``."""
    return -log_conditional_batch(batch.logits, batch.labels, kind).mean()


def loss_cat_twin(batch: SupervisedBatch, denom_logits: Tensor, kind: RescaleKind) -> Tensor:
    """Categorical cross-entropy contrasted against the empirical parametric marginal.

    Every row of ``denom_logits`` enters the marginal, including a row that is
    also the numerator sample when both batches coincide.
    """
    if denom_logits.shape[0] < 1:
        raise ValueError("the denominator batch is empty")
    if denom_logits.shape[1] != batch.n_classes:
        raise ValueError(f"denominator has {denom_logits.shape[1]} classes, batch has {batch.n_classes}")
    numerator = log_conditional_batch(batch.logits, batch.labels, kind)
    denominator = log_marginal_batch(denom_logits, batch.labels, kind)
    return -(numerator - denominator).mean()


def loss_bin_cross(batch: SupervisedBatch, kind: RescaleKind) -> Tensor:
    return -log_binary_conditional_batch(batch.logits, batch.labels, kind).mean()


class CatCrossLoss(SupervisedLoss):
    name = "cat-cross"

    def compute(self, batch: SupervisedBatch, denom_logits: Optional[Tensor] = None) -> Tensor:
        return loss_cat_cross(batch, self.kind)


class CatTwinLoss(SupervisedLoss):
    name = "cat-twin"

    def compute(self, batch: SupervisedBatch, denom_logits: Optional[Tensor] = None) -> Tensor:
        # Without a separate denominator batch the labelled batch is reused.
        return loss_cat_twin(batch, batch.logits if denom_logits is None else denom_logits, self.kind)


class BinCrossLoss(SupervisedLoss):
    name = "bin-cross"

    def compute(self, batch: SupervisedBatch, denom_logits: Optional[Tensor] = None) -> Tensor:
        return loss_bin_cross(batch, self.kind)


def get_supervised_loss(variant: str, kind: RescaleKind = RescaleKind.SOFTMAX) -> SupervisedLoss:
    if variant == "cat-cross":
        return CatCrossLoss(kind)
    elif variant == "cat-twin":
        return CatTwinLoss(kind)
    elif variant == "bin-cross":
        return BinCrossLoss(kind)
    else:
        raise ValueError(f"Unknown loss variant: {variant}")
