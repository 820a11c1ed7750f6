from dataclasses import replace
from typing import Dict, Tuple

import numpy as np

from nn.layers import Module
from nn.networks import (Discriminator, DiscriminatorConfig, Encoder, EncoderConfig,
                         Predictor, PredictorConfig)
from nn.tensor import Tensor


class TwinModel(Module):
    """Encoder followed by predictor; returns latents and logits."""

    def __init__(self, encoder: Encoder, predictor: Predictor):
        super().__init__()
        self.encoder = encoder
        self.predictor = predictor

    def forward(self, x) -> Tuple[Tensor, Tensor]:
        latent = self.encoder(x)
        return latent, self.predictor(latent)


def resolve_configs(encoder_cfg: EncoderConfig, predictor_cfg: PredictorConfig,
                    disc_cfg: DiscriminatorConfig, input_shape: Tuple[int, ...],
                    n_classes: int) -> Tuple[EncoderConfig, PredictorConfig, DiscriminatorConfig]:
    """Align network dimensions with the dataset and with each other."""
    input_dim = int(np.prod(input_shape))
    image_shape = tuple(input_shape) if len(input_shape) == 2 else ()
    encoder_cfg = replace(encoder_cfg, input_dim=input_dim, image_shape=image_shape)
    predictor_cfg = replace(predictor_cfg, latent_dim=encoder_cfg.latent_dim, n_classes=n_classes)
    disc_cfg = replace(disc_cfg, input_dim=n_classes)
    return encoder_cfg, predictor_cfg, disc_cfg


def build_networks(encoder_cfg: EncoderConfig, predictor_cfg: PredictorConfig,
                   disc_cfg: DiscriminatorConfig, init_seed, dropout_seed,
                   dtype=np.float64) -> Tuple[TwinModel, Discriminator]:
    init_rng = np.random.default_rng(init_seed)
    encoder = Encoder(encoder_cfg, init_rng, np.random.default_rng(dropout_seed))
    model = TwinModel(encoder, Predictor(predictor_cfg, init_rng))
    discriminator = Discriminator(disc_cfg, init_rng)
    return model.to(dtype), discriminator.to(dtype)


def full_state(model: TwinModel, discriminator: Discriminator) -> Dict[str, np.ndarray]:
    state = {f"model.{k}": v for k, v in model.state_dict().items()}
    state.update({f"discriminator.{k}": v for k, v in discriminator.state_dict().items()})
    return state
