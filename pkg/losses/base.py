from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional
import numpy as np

from mi.densities import RescaleKind
from nn.tensor import Tensor, as_tensor


@dataclass(frozen=True)
class LossWeights:
    """Weights of the critic, latent and augmentation terms of the total loss."""

    lambda_critic: float = 0.0
    lambda_latent: float = 0.0
    lambda_augment: float = 0.0

    def __post_init__(self):
        for key in ("lambda_critic", "lambda_latent", "lambda_augment"):
            value = getattr(self, key)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{key} must be finite and non-negative, got {value}")

    def as_dict(self):
        return {"lambda_critic": self.lambda_critic,
                "lambda_latent": self.lambda_latent,
                "lambda_augment": self.lambda_augment}


@dataclass
class SupervisedBatch:
    logits: Tensor
    labels: np.ndarray

    def __post_init__(self):
        self.logits = as_tensor(self.logits)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.logits.ndim != 2:
            raise ValueError(f"logits must be (N, C), got shape {self.logits.shape}")
        n, c = self.logits.shape
        if n < 1:
            raise ValueError("a supervised batch needs at least one row")
        if self.labels.shape[0] != n:
            raise ValueError(f"{self.labels.shape[0]} labels for {n} logit rows")
        if self.labels.min() < 0 or self.labels.max() >= c:
            raise ValueError(f"labels outside [0, {c})")

    @property
    def n_classes(self) -> int:
        return self.logits.shape[1]


@dataclass
class LatentPairBatch:
    """Row i of ``anchors`` and row i of ``targets`` form a positive pair.

    Targets are detached on construction.
    """

    anchors: Tensor
    targets: Tensor

    def __post_init__(self):
        self.anchors = as_tensor(self.anchors)
        self.targets = as_tensor(self.targets).detach()
        if self.anchors.ndim != 2 or self.anchors.shape != self.targets.shape:
            raise ValueError(f"anchor/target shape mismatch: {self.anchors.shape} vs {self.targets.shape}")


class SupervisedLoss(ABC):
    """A supervised loss variant over a labelled batch."""

    name: str = ""

    def __init__(self, kind: RescaleKind = RescaleKind.SOFTMAX):
        self.kind = RescaleKind(kind)

    @abstractmethod
    def compute(self, batch: SupervisedBatch, denom_logits: Optional[Tensor] = None) -> Tensor:
        pass

    def __call__(self, batch: SupervisedBatch, denom_logits: Optional[Tensor] = None) -> Tensor:
        return self.compute(batch, denom_logits)
