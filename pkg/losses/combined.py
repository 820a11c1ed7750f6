from typing import Optional, Union

from nn.tensor import Tensor, as_tensor
from .base import LossWeights

Scalar = Union[Tensor, float]


def loss_total(sup: Scalar, critic_model: Optional[Scalar], latent: Optional[Scalar],
               augment: Optional[Scalar], weights: LossWeights) -> Tensor:
    """``sup + lambda_C critic + lambda_L latent + lambda_A augment``.

    A term whose weight is zero is skipped entirely, so callers may pass
    ``None`` for components they never computed.
    """
    total = as_tensor(sup)
    for weight, term, name in ((weights.lambda_critic, critic_model, "critic"),
                               (weights.lambda_latent, latent, "latent"),
                               (weights.lambda_augment, augment, "augment")):
        if weight == 0:
            continue
        if term is None:
            raise ValueError(f"the {name} term has weight {weight} but was not computed")
        total = total + as_tensor(term) * weight
    return total
