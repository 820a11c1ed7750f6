from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from losses.base import LossWeights
from losses.critic import CriticForm
from mi.densities import RescaleKind

DEFAULT_SEEDS = (42, 1337, 3435)
WEIGHT_SET = (0.001, 0.01, 0.1, 1.0)
LOSS_VARIANTS = ("cat-cross", "cat-twin", "bin-cross")


@dataclass
class TrainConfig:
    """Hyperparameters of one training run.

    ``labelled_batch = 0`` means ``min(subset_size, 128)``; ``disc_lr = 0``
    means the model's learning rate.
    """

    epochs: int = 5
    batch_size: int = 128
    base_lr: float = 5e-5
    warmup_steps: int = 150
    warmup_factor: float = 0.001
    weight_decay: float = 0.01
    disc_lr: float = 0.0
    seeds: Tuple[int, ...] = DEFAULT_SEEDS
    loss_variant: str = "cat-cross"
    rescale: RescaleKind = RescaleKind.SOFTMAX
    subset_size: int = 100
    labelled_batch: int = 0
    denominator: str = "unlabelled"
    prior: str = "uniform"
    critic_form: CriticForm = CriticForm.MINIMAX
    infonce_scale: float = 1.0
    precision: str = "float64"
    eval_batch_size: int = 1024
    weights: LossWeights = field(default_factory=LossWeights)

    def __post_init__(self):
        self.rescale = RescaleKind(self.rescale)
        self.critic_form = CriticForm(self.critic_form)
        for key in ("epochs", "batch_size", "subset_size", "eval_batch_size"):
            if getattr(self, key) <= 0:
                raise ValueError(f"train.{key} must be positive, got {getattr(self, key)}")
        for key in ("base_lr", "infonce_scale"):
            if not getattr(self, key) > 0:
                raise ValueError(f"train.{key} must be positive, got {getattr(self, key)}")
        for key in ("warmup_steps", "labelled_batch", "weight_decay", "disc_lr"):
            if getattr(self, key) < 0:
                raise ValueError(f"train.{key} must be non-negative, got {getattr(self, key)}")
        if not 0.0 < self.warmup_factor <= 1.0:
            raise ValueError(f"train.warmup_factor must lie in (0, 1], got {self.warmup_factor}")
        if not self.seeds:
            raise ValueError("train.seeds must not be empty")
        if self.loss_variant not in LOSS_VARIANTS:
            raise ValueError(f"Unknown loss variant: {self.loss_variant}")
        if self.denominator not in ("unlabelled", "labelled"):
            raise ValueError(f"train.denominator must be 'unlabelled' or 'labelled', got {self.denominator}")
        if self.prior not in ("uniform", "empirical"):
            raise ValueError(f"train.prior must be 'uniform' or 'empirical', got {self.prior}")
        if self.precision not in ("float64", "float32"):
            raise ValueError(f"train.precision must be 'float64' or 'float32', got {self.precision}")

    @property
    def dtype(self):
        return np.float32 if self.precision == "float32" else np.float64


@dataclass
class AblationConfig:
    """The activation sequence and weight sweep of the ablation study."""

    lambda_critic: float = 0.001
    lambda_latent: float = 0.1
    lambda_augment: float = 0.1
    final_rescale: RescaleKind = RescaleKind.SOFTMAX
    subset_sizes: Tuple[int, ...] = (100, 1000)
    weight_set: Tuple[float, ...] = WEIGHT_SET
    sweep_variants: Tuple[str, ...] = LOSS_VARIANTS
    sweep_rescales: Tuple[str, ...] = ("softmax", "sigmoid")
    threads: int = 1
    # pick the +critic, +latent and +augment weights from weight_set instead of the lambdas above
    tune_weights: bool = False

    def __post_init__(self):
        self.final_rescale = RescaleKind(self.final_rescale)
        LossWeights(self.lambda_critic, self.lambda_latent, self.lambda_augment)
        if not self.subset_sizes or min(self.subset_sizes) < 1:
            raise ValueError(f"ablation.subset_sizes must be positive, got {self.subset_sizes}")
        if any(w < 0 for w in self.weight_set):
            raise ValueError(f"ablation.weight_set must be non-negative, got {self.weight_set}")
        for variant in self.sweep_variants:
            if variant not in LOSS_VARIANTS:
                raise ValueError(f"Unknown loss variant: {variant}")
        for kind in self.sweep_rescales:
            RescaleKind(kind)
        if self.threads < 1:
            raise ValueError(f"ablation.threads must be at least 1, got {self.threads}")
        if self.tune_weights and not self.weight_set:
            raise ValueError("ablation.tune_weights needs a non-empty weight_set")
