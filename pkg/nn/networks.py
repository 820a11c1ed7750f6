"""Encoder, predictor and discriminator networks at desk scale.

The encoder keeps the topology of a frozen-backbone fine-tuning model: a
feature extractor emits a CLS-like summary vector and a grid of patch-like
tokens, the tokens go through one transformer layer and are mean pooled, the
pooled token is concatenated with the CLS vector and a projector produces the
latent representation. The CLS vector bypasses the transformer layer.
"""
import numpy as np
from dataclasses import dataclass
from typing import Optional, Tuple

from . import functional as F
from .layers import Dropout, LeakyReLU, Linear, Module, ReLU, Sequential, TransformerLayer
from .tensor import Tensor, as_tensor


@dataclass
class EncoderConfig:
    input_dim: int = 2
    feature_dim: int = 64
    n_patch_tokens: int = 4
    token_dim: int = 32
    projector_hidden: int = 256
    dropout_p: float = 0.3
    leaky_slope: float = 0.01
    # (H, W) for image inputs: tokens then come from a 2x2 grid of patches.
    image_shape: Tuple[int, ...] = ()
    freeze_backbone: bool = False

    def __post_init__(self):
        for key in ("input_dim", "feature_dim", "n_patch_tokens", "token_dim", "projector_hidden"):
            if getattr(self, key) <= 0:
                raise ValueError(f"encoder.{key} must be positive, got {getattr(self, key)}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError(f"encoder.dropout_p must lie in [0, 1), got {self.dropout_p}")
        if self.leaky_slope <= 0:
            raise ValueError(f"encoder.leaky_slope must be positive, got {self.leaky_slope}")
        if self.image_shape:
            if len(self.image_shape) != 2:
                raise ValueError(f"encoder.image_shape must be (H, W), got {self.image_shape}")
            h, w = self.image_shape
            if h * w != self.input_dim:
                raise ValueError(f"encoder.image_shape {self.image_shape} does not match input_dim {self.input_dim}")
            grid = int(round(np.sqrt(self.n_patch_tokens)))
            if grid * grid != self.n_patch_tokens or h % grid or w % grid:
                raise ValueError(
                    f"encoder.image_shape {self.image_shape} cannot be cut into {self.n_patch_tokens} square-grid patches")

    @property
    def latent_dim(self) -> int:
        return self.projector_hidden


@dataclass
class PredictorConfig:
    latent_dim: int = 256
    hidden: int = 128
    n_classes: int = 10
    leaky_slope: float = 0.01

    def __post_init__(self):
        for key in ("latent_dim", "hidden", "n_classes"):
            if getattr(self, key) <= 0:
                raise ValueError(f"predictor.{key} must be positive, got {getattr(self, key)}")


@dataclass
class DiscriminatorConfig:
    input_dim: int = 10
    hidden: int = 64

    def __post_init__(self):
        if self.input_dim <= 0 or self.hidden <= 0:
            raise ValueError(f"discriminator dimensions must be positive, got {self.input_dim}, {self.hidden}")


class Backbone(Module):
    """Trainable stand-in for a foundation model: CLS vector plus patch tokens."""

    def __init__(self, cfg: EncoderConfig, rng: np.random.Generator):
        super().__init__()
        self.cfg = cfg
        self.cls_head = Linear(cfg.input_dim, cfg.feature_dim, rng)
        if cfg.image_shape:
            h, w = cfg.image_shape
            self.grid = int(round(np.sqrt(cfg.n_patch_tokens)))
            patch_pixels = (h // self.grid) * (w // self.grid)
            self.token_head = Linear(patch_pixels, cfg.token_dim, rng)
        else:
            self.grid = 0
            self.token_head = Linear(cfg.input_dim, cfg.n_patch_tokens * cfg.token_dim, rng)
        self.activation = LeakyReLU(cfg.leaky_slope)

    def _patches(self, x: Tensor) -> Tensor:
        n = x.shape[0]
        h, w = self.cfg.image_shape
        g = self.grid
        grid = x.reshape(n, g, h // g, g, w // g).transpose(0, 1, 3, 2, 4)
        return grid.reshape(n, g * g, (h // g) * (w // g))

    def forward(self, x: Tensor) -> Tuple[Tensor, Tensor]:
        cls = self.activation(self.cls_head(x))
        if self.grid:
            tokens = self.activation(self.token_head(self._patches(x)))
        else:
            flat = self.activation(self.token_head(x))
            tokens = flat.reshape(x.shape[0], self.cfg.n_patch_tokens, self.cfg.token_dim)
        return cls, tokens


class Encoder(Module):
    """Backbone -> transformer over patch tokens -> pool -> concat CLS -> projector."""

    def __init__(self, cfg: EncoderConfig, rng: np.random.Generator,
                 dropout_rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.cfg = cfg
        self.backbone = Backbone(cfg, rng)
        self.transformer = TransformerLayer(cfg.token_dim, rng)
        self.projector = Sequential(
            Linear(cfg.feature_dim + cfg.token_dim, cfg.projector_hidden, rng),
            LeakyReLU(cfg.leaky_slope),
            Dropout(cfg.dropout_p, dropout_rng),
        )
        if cfg.freeze_backbone:
            self.backbone.freeze()

    def forward(self, x) -> Tensor:
        x = as_tensor(x)
        x = x.reshape(x.shape[0], self.cfg.input_dim)
        cls, tokens = self.backbone(x)
        pooled = F.mean_pool(self.transformer(tokens), axis=1)
        return self.projector(F.concat([cls, pooled], axis=1))


def encoder_forward(encoder: Encoder, x, train_mode: bool) -> Tensor:
    """Run ``encoder`` on ``x`` with dropout active only when ``train_mode``."""
    previous = encoder.training
    encoder.train(train_mode)
    try:
        return encoder(x)
    finally:
        encoder.train(previous)


class Predictor(Module):
    def __init__(self, cfg: PredictorConfig, rng: np.random.Generator):
        super().__init__()
        self.cfg = cfg
        self.net = Sequential(
            Linear(cfg.latent_dim, cfg.hidden, rng),
            LeakyReLU(cfg.leaky_slope),
            Linear(cfg.hidden, cfg.n_classes, rng),
        )

    def forward(self, latent: Tensor) -> Tensor:
        return self.net(latent)


class Discriminator(Module):
    """Critic over class-probability vectors, returning one logit per row.

    ``D(y) = sigmoid(logit)``; losses consume it through ``log_prob`` and
    ``log_one_minus_prob`` so D never rounds to exactly 0 or 1 in log space.
    """

    def __init__(self, cfg: DiscriminatorConfig, rng: np.random.Generator):
        super().__init__()
        self.cfg = cfg
        self.net = Sequential(
            Linear(cfg.input_dim, cfg.hidden, rng),
            ReLU(),
            Linear(cfg.hidden, cfg.hidden, rng),
            ReLU(),
            Linear(cfg.hidden, 1, rng),
        )

    def forward(self, y) -> Tensor:
        y = as_tensor(y)
        return self.net(y).reshape(y.shape[0])

    def log_prob(self, y) -> Tensor:
        return F.log_sigmoid(self(y))

    def log_one_minus_prob(self, y) -> Tensor:
        return F.log_sigmoid(-self(y))

    def prob(self, y) -> np.ndarray:
        return np.exp(self.log_prob(y).data)
