"""Adversarial critic between model outputs and prior samples of p(y).

The discriminator ends in a log-sigmoid head, so ``log D`` and ``log(1 - D)``
are always finite. The constant ``log 2`` and the factor one half of the
Jensen-Shannon identity are left out of both training losses.
"""
from enum import Enum

import numpy as np
from typing import Optional, Sequence

from nn.networks import Discriminator
from nn.tensor import Tensor, as_tensor
from mi.oracles import LOG2


def sample_prior_onehots(rng: np.random.Generator, m: int, n_classes: int,
                         frequencies: Optional[Sequence[float]] = None) -> np.ndarray:
    """Draw ``m`` exact one-hot vectors from a categorical prior (uniform by default)."""
    if m < 1:
        raise ValueError(f"need at least one prior sample, got {m}")
    if frequencies is None:
        classes = rng.integers(0, n_classes, size=m)
    else:
        p = np.asarray(frequencies, dtype=np.float64)
        if p.shape != (n_classes,) or np.any(p < 0) or p.sum() <= 0:
            raise ValueError(f"prior frequencies must be {n_classes} non-negative weights")
        classes = rng.choice(n_classes, size=m, p=p / p.sum())
    onehots = np.zeros((m, n_classes))
    onehots[np.arange(m), classes] = 1.0
    return onehots


def loss_critic_disc(probs_model: Tensor, onehots_prior: np.ndarray,
                     discriminator: Discriminator) -> Tensor:
    """``-mean log D(prior) - mean log(1 - D(model))``, minimised by the discriminator.

    Model probabilities are detached so no gradient reaches the encoder or
    predictor.
    """
    probs_model = as_tensor(probs_model).detach()
    prior = Tensor(np.asarray(onehots_prior, dtype=probs_model.dtype))
    if prior.shape[1] != probs_model.shape[1]:
        raise ValueError(f"prior has {prior.shape[1]} classes, model outputs have {probs_model.shape[1]}")
    real = discriminator.log_prob(prior).mean()
    fake = discriminator.log_one_minus_prob(probs_model).mean()
    return -real - fake


class CriticForm(str, Enum):
    """Objective the encoder and predictor minimise against the discriminator.

    Both share the fixed point ``D = 1/2``. The minimax form's gradient
    vanishes once the discriminator rejects model outputs confidently; the
    non-saturating form keeps it.
    """
    MINIMAX = "minimax"
    NON_SATURATING = "non-saturating"


def loss_critic_model(probs_model: Tensor, discriminator: Discriminator,
                      form: CriticForm = CriticForm.MINIMAX) -> Tensor:
    """``mean log(1 - D(model))``, or ``-mean log D(model)`` for the non-saturating form.

    The discriminator's parameters are frozen for the forward pass, so a
    later ``backward`` leaves them untouched.
    """
    form = CriticForm(form)
    with discriminator.frozen():
        probs_model = as_tensor(probs_model)
        if form is CriticForm.NON_SATURATING:
            return -discriminator.log_prob(probs_model).mean()
        return discriminator.log_one_minus_prob(probs_model).mean()


def jsd_from_critic_loss(disc_loss: float) -> float:
    """Divergence estimate implied by a discriminator loss: ``log 2 - disc_loss / 2``."""
    return LOG2 - 0.5 * float(disc_loss)
