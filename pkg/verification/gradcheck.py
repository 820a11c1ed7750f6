"""Backprop against central finite differences for every loss and layer."""
from typing import Callable, List, Sequence, Tuple

import numpy as np

from losses.base import SupervisedBatch
from losses.contrastive import DenominatorAxis, loss_infonce, loss_latent_augment, loss_latent_supervised
from losses.critic import loss_critic_disc, loss_critic_model
from losses.supervised import loss_bin_cross, loss_cat_cross, loss_cat_twin
from mi.densities import RescaleKind, rescale
from nn.gradcheck import gradcheck
from nn.layers import Linear, SelfAttention, SwiGLU, TransformerLayer
from nn.networks import (Discriminator, DiscriminatorConfig, Encoder, EncoderConfig, Predictor,
                         PredictorConfig)
from nn.tensor import Tensor
from .base import VerificationSuite, at_most

Case = Tuple[str, Callable[[], Tensor], Sequence[Tensor]]


def _leaf(rng: np.random.Generator, *shape, scale: float = 1.0) -> Tensor:
    return Tensor(rng.normal(0.0, scale, size=shape), requires_grad=True)


class GradcheckSuite(VerificationSuite):
    name = "gradcheck"

    def __init__(self, seed: int = 0, threshold: float = 1e-4, eps: float = 1e-5):
        super().__init__(seed)
        self.threshold = threshold
        self.eps = eps

    def loss_cases(self) -> List[Case]:
        rng = self.rng(0)
        n, c, d = 6, 4, 5
        labels = rng.integers(0, c, size=n)
        logits = _leaf(rng, n, c)
        denom = _leaf(rng, n + 2, c)
        anchors = _leaf(rng, n, d)
        targets = rng.normal(size=(n, d))
        scores = _leaf(rng, n, n)
        disc = Discriminator(DiscriminatorConfig(input_dim=c, hidden=7), rng)
        prior = np.eye(c)[rng.integers(0, c, size=n)]
        pair_labels = np.array([0, 0, 1, 1, 2, 3])

        cases: List[Case] = []
        for kind in RescaleKind:
            cases += [
                (f"cat-cross/{kind.value}", lambda k=kind: loss_cat_cross(SupervisedBatch(logits, labels), k), [logits]),
                (f"cat-twin/{kind.value}",
                 lambda k=kind: loss_cat_twin(SupervisedBatch(logits, labels), denom, k), [logits, denom]),
                (f"bin-cross/{kind.value}", lambda k=kind: loss_bin_cross(SupervisedBatch(logits, labels), k), [logits]),
                (f"critic-model/{kind.value}",
                 lambda k=kind: loss_critic_model(rescale(logits, k), disc), [logits]),
            ]
        for axis in DenominatorAxis:
            cases.append((f"infonce/{axis.value}", lambda a=axis: loss_infonce(scores, a), [scores]))
        cases += [
            ("latent-augment", lambda: loss_latent_augment(anchors, targets), [anchors]),
            ("latent-supervised", lambda: loss_latent_supervised(anchors, pair_labels, np.random.default_rng(0)).loss,
             [anchors]),
            ("critic-disc", lambda: loss_critic_disc(rescale(logits, RescaleKind.SOFTMAX), prior, disc),
             disc.parameters()),
        ]
        return cases

    def composed_cases(self) -> List[Case]:
        """Each loss on top of encoder and predictor, checked against every network parameter."""
        rng = self.rng(2)
        n, c = 5, 3
        encoder = Encoder(EncoderConfig(input_dim=4, feature_dim=3, n_patch_tokens=2, token_dim=4,
                                        projector_hidden=5, dropout_p=0.0), rng).eval()
        predictor = Predictor(PredictorConfig(latent_dim=5, hidden=4, n_classes=c), rng)
        disc = Discriminator(DiscriminatorConfig(input_dim=c, hidden=4), rng)
        x_l, x_u = rng.normal(size=(n, 4)), rng.normal(size=(n + 1, 4))
        labels = np.array([0, 0, 1, 1, 2])
        targets = rng.normal(size=(n + 1, 5))
        params = encoder.parameters() + predictor.parameters()

        def logits(x):
            return predictor(encoder(Tensor(x)))

        cases: List[Case] = []
        for kind in RescaleKind:
            cases += [
                (f"composed/cat-cross/{kind.value}",
                 lambda k=kind: loss_cat_cross(SupervisedBatch(logits(x_l), labels), k), params),
                (f"composed/cat-twin/{kind.value}",
                 lambda k=kind: loss_cat_twin(SupervisedBatch(logits(x_l), labels), logits(x_u), k), params),
                (f"composed/bin-cross/{kind.value}",
                 lambda k=kind: loss_bin_cross(SupervisedBatch(logits(x_l), labels), k), params),
                (f"composed/critic-model/{kind.value}",
                 lambda k=kind: loss_critic_model(rescale(logits(x_u), k), disc), params),
            ]
        cases += [
            ("composed/latent-supervised",
             lambda: loss_latent_supervised(encoder(Tensor(x_l)), labels, np.random.default_rng(0)).loss,
             encoder.parameters()),
            ("composed/latent-augment", lambda: loss_latent_augment(encoder(Tensor(x_u)), targets),
             encoder.parameters()),
        ]
        return cases

    def layer_cases(self) -> List[Case]:
        rng = self.rng(1)
        x2 = _leaf(rng, 3, 4)
        x3 = _leaf(rng, 2, 3, 4)
        direction2 = rng.normal(size=(3, 5))
        direction3 = rng.normal(size=(2, 3, 4))

        linear = Linear(4, 5, rng)
        attention = SelfAttention(4, rng)
        swiglu = SwiGLU(4, rng)
        block = TransformerLayer(4, rng)
        encoder = Encoder(EncoderConfig(input_dim=4, feature_dim=3, n_patch_tokens=2, token_dim=4,
                                        projector_hidden=5, dropout_p=0.0), rng).eval()
        x_enc = _leaf(rng, 3, 4)

        # scalar projections <layer(x), r> make each layer's Jacobian checkable
        return [
            ("linear", lambda: (linear(x2) * direction2).sum(), [x2] + linear.parameters()),
            ("self-attention", lambda: (attention(x3) * direction3).sum(), [x3] + attention.parameters()),
            ("swiglu", lambda: (swiglu(x3) * direction3).sum(), [x3] + swiglu.parameters()),
            ("transformer-layer", lambda: (block(x3) * direction3).sum(), [x3] + block.parameters()),
            ("encoder", lambda: (encoder(x_enc) * direction2).sum(), [x_enc] + encoder.parameters()),
        ]

    def run(self):
        results = []
        for name, fn, inputs in self.loss_cases() + self.layer_cases() + self.composed_cases():
            error = gradcheck(fn, list(inputs), self.eps)
            results.append(at_most(self.name, name, error, self.threshold, "max relative error"))
        return results
