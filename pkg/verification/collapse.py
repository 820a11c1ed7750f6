"""Sigmoid collapse on a linear toy model.

With sigmoid rescaling the conditional-only loss has a trivial maximum where
every output saturates at 1. Contrasting against the empirical marginal, or
adding the critic in its non-saturating form, removes that maximum.
"""
from dataclasses import dataclass
from typing import Dict

import numpy as np

from losses.base import SupervisedBatch
from losses.critic import CriticForm, loss_critic_disc, loss_critic_model, sample_prior_onehots
from losses.supervised import loss_cat_cross, loss_cat_twin
from mi.densities import RescaleKind, one_hot
from nn import functional as F
from nn.networks import Discriminator, DiscriminatorConfig
from nn.optim import AdamW
from nn.tensor import Tensor
from .base import VerificationSuite, at_least, at_most

COLLAPSE_VARIANTS = ("cat-cross", "cat-twin", "cat-cross+critic")


@dataclass
class CollapseConfig:
    n_samples: int = 64
    dim: int = 5
    n_classes: int = 4
    feature_scale: float = 0.1
    steps: int = 2000
    lr: float = 1.0
    lambda_critic: float = 1.0
    disc_lr: float = 0.01
    disc_hidden: int = 16
    critic_form: CriticForm = CriticForm.NON_SATURATING


def run_collapse(variant: str, cfg: CollapseConfig = CollapseConfig(), seed: int = 0) -> Dict[str, float]:
    """Plain gradient descent from zero weights; returns mean sigmoid outputs."""
    if variant not in COLLAPSE_VARIANTS:
        raise ValueError(f"Unknown collapse variant: {variant}")
    rng = np.random.default_rng(seed)
    x = Tensor(rng.normal(0.0, cfg.feature_scale, size=(cfg.n_samples, cfg.dim)))
    labels = np.arange(cfg.n_samples) % cfg.n_classes
    weight = Tensor(np.zeros((cfg.dim, cfg.n_classes)), requires_grad=True)
    bias = Tensor(np.zeros(cfg.n_classes), requires_grad=True)
    sig = RescaleKind.SIGMOID

    disc = disc_opt = None
    if variant == "cat-cross+critic":
        disc = Discriminator(DiscriminatorConfig(cfg.n_classes, cfg.disc_hidden), rng)
        disc_opt = AdamW(disc.parameters(), lr=cfg.disc_lr, weight_decay=0.0)

    for _ in range(cfg.steps):
        logits = x @ weight + bias
        batch = SupervisedBatch(logits, labels)
        if variant == "cat-twin":
            loss = loss_cat_twin(batch, logits, sig)
        else:
            loss = loss_cat_cross(batch, sig)
        if disc is not None:
            probs = F.sigmoid(logits)
            disc_opt.zero_grad()
            loss_critic_disc(probs, sample_prior_onehots(rng, cfg.n_samples, cfg.n_classes), disc).backward()
            disc_opt.step()
            loss = loss + loss_critic_model(probs, disc, cfg.critic_form) * cfg.lambda_critic
        weight.zero_grad()
        bias.zero_grad()
        loss.backward()
        weight.data = weight.data - cfg.lr * weight.grad
        bias.data = bias.data - cfg.lr * bias.grad

    outputs = 1.0 / (1.0 + np.exp(-(x.data @ weight.data + bias.data)))
    target = one_hot(labels, cfg.n_classes).astype(bool)
    return {
        "mean_output": float(outputs.mean()),
        "mean_target_output": float(outputs[target].mean()),
        "mean_non_target_output": float(outputs[~target].mean()),
    }


class CollapseSuite(VerificationSuite):
    name = "collapse"

    def __init__(self, seed: int = 0, cfg: CollapseConfig = None):
        super().__init__(seed)
        self.cfg = cfg or CollapseConfig()

    def run(self):
        steps = f"{self.cfg.steps} steps"
        cross = run_collapse("cat-cross", self.cfg, self.seed)
        twin = run_collapse("cat-twin", self.cfg, self.seed)
        critic = run_collapse("cat-cross+critic", self.cfg, self.seed)
        return [
            at_least(self.name, "cat-cross/sigmoid saturates every output", cross["mean_output"], 0.99, steps),
            at_most(self.name, "cat-twin/sigmoid keeps non-target outputs low",
                    twin["mean_non_target_output"], 0.5, steps),
            at_most(self.name, "critic keeps non-target outputs low",
                    critic["mean_non_target_output"], 0.5, steps),
        ]
