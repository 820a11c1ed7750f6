import numpy as np
import pytest

from data.augment import AugmentationConfig
from data.base import DatasetConfig
from nn.networks import DiscriminatorConfig, EncoderConfig, PredictorConfig
from trainer.config import TrainConfig


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def tiny_encoder_cfg():
    return EncoderConfig(feature_dim=6, n_patch_tokens=2, token_dim=4, projector_hidden=8, dropout_p=0.1)


@pytest.fixture
def tiny_predictor_cfg():
    return PredictorConfig(hidden=8)


@pytest.fixture
def tiny_disc_cfg():
    return DiscriminatorConfig(hidden=6)


@pytest.fixture
def blobs_cfg():
    return DatasetConfig(kind="blobs", n_classes=4, n_per_class=30, test_per_class=10, dim=2,
                         separation=10.0, seed=0)


@pytest.fixture
def tiny_train_cfg():
    return TrainConfig(epochs=1, batch_size=16, base_lr=1e-3, warmup_steps=5, subset_size=12,
                       seeds=(42,), eval_batch_size=64)


@pytest.fixture
def no_augment():
    return AugmentationConfig.disabled()
