"""Adversarial semi-supervised training loop.

Each step evaluates the discriminator loss and the weighted total loss against
the same discriminator, checks every term, then updates discriminator and
model together. Terms whose weight is zero are never computed.
"""
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from data.augment import AugmentationConfig, augment
from data.base import Dataset
from data.sampler import DualBatch, DualSampler, stratified_subset
from losses.base import SupervisedBatch
from losses.combined import loss_total
from losses.contrastive import loss_latent_augment, loss_latent_supervised
from losses.critic import jsd_from_critic_loss, loss_critic_disc, loss_critic_model, sample_prior_onehots
from losses.supervised import get_supervised_loss
from mi.densities import rescale
from nn.checkpoint import save_checkpoint
from nn.networks import DiscriminatorConfig, EncoderConfig, PredictorConfig, encoder_forward
from nn.optim import AdamW, warmup_lr
from nn.tensor import Tensor, no_grad
from .config import TrainConfig
from .evaluation import evaluate_accuracy
from .metrics import MetricsWriter, RunMetrics
from .model import build_networks, full_state, resolve_configs

logger = logging.getLogger(__name__)


class NonFiniteLossError(FloatingPointError):
    """A loss component became NaN or infinite; the run is aborted."""

    def __init__(self, component: str, value: float, step: int):
        super().__init__(f"non-finite {component} loss ({value!r}) at step {step}")
        self.component = component
        self.value = value
        self.step = step


@dataclass
class RunStreams:
    """Independent random generators of one run, all derived from its seed."""

    init: np.random.SeedSequence
    dropout: np.random.SeedSequence
    sampler: int
    subset: np.random.Generator
    pairing: np.random.Generator
    augment: np.random.Generator
    prior: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "RunStreams":
        init, dropout, sampler, subset, pairing, aug, prior = np.random.SeedSequence(seed).spawn(7)
        return cls(init, dropout, int(sampler.generate_state(1)[0]), np.random.default_rng(subset),
                   np.random.default_rng(pairing), np.random.default_rng(aug), np.random.default_rng(prior))


class Trainer:
    def __init__(self, cfg: TrainConfig, seed: int,
                 encoder_cfg: Optional[EncoderConfig] = None,
                 predictor_cfg: Optional[PredictorConfig] = None,
                 disc_cfg: Optional[DiscriminatorConfig] = None,
                 augment_cfg: Optional[AugmentationConfig] = None):
        self.cfg = cfg
        self.seed = seed
        self.encoder_cfg = encoder_cfg or EncoderConfig()
        self.predictor_cfg = predictor_cfg or PredictorConfig()
        self.disc_cfg = disc_cfg or DiscriminatorConfig()
        self.augment_cfg = augment_cfg or AugmentationConfig()
        self.streams = RunStreams.from_seed(seed)
        self.supervised = get_supervised_loss(cfg.loss_variant, cfg.rescale)
        self.model = None
        self.discriminator = None
        self.step = 0
        self.flip_allowed = False
        self.prior_frequencies = None

    # -- setup -------------------------------------------------------------

    def build(self, input_shape, n_classes: int) -> None:
        self.encoder_cfg, self.predictor_cfg, self.disc_cfg = resolve_configs(
            self.encoder_cfg, self.predictor_cfg, self.disc_cfg, input_shape, n_classes)
        self.model, self.discriminator = build_networks(
            self.encoder_cfg, self.predictor_cfg, self.disc_cfg,
            self.streams.init, self.streams.dropout, self.cfg.dtype)
        wd = self.cfg.weight_decay
        self.model_opt = AdamW(self.model.parameters(), lr=self.cfg.base_lr, weight_decay=wd)
        self.disc_opt = AdamW(self.discriminator.parameters(), lr=self.cfg.disc_lr or self.cfg.base_lr,
                              weight_decay=wd)
        self.step = 0

    def _inputs(self, images: np.ndarray) -> Tensor:
        return Tensor(np.asarray(images, dtype=self.cfg.dtype).reshape(images.shape[0], -1))

    def _lr(self, base: float) -> float:
        return warmup_lr(self.step, base, self.cfg.warmup_steps, self.cfg.warmup_factor)

    def _check(self, component: str, value: Tensor) -> float:
        v = float(value.data)
        if not np.isfinite(v):
            raise NonFiniteLossError(component, v, self.step)
        return v

    # -- one step ----------------------------------------------------------

    def train_step(self, batch: DualBatch) -> Dict[str, Any]:
        if self.model is None:
            raise RuntimeError("call build() before train_step()")
        w = self.cfg.weights
        kind = self.cfg.rescale
        record: Dict[str, Any] = {"step": self.step, "lr": self._lr(self.cfg.base_lr)}

        self.model.train()
        x_l = self._inputs(batch.labelled_images)
        z_l, logits_l = self.model(x_l)
        needs_unlabelled = (w.lambda_critic > 0 or w.lambda_augment > 0
                            or (self.cfg.loss_variant == "cat-twin" and self.cfg.denominator == "unlabelled"))
        z_u = logits_u = None
        if needs_unlabelled:
            z_u, logits_u = self.model(self._inputs(batch.unlabelled_images))

        critic_term = disc_loss = None
        if w.lambda_critic > 0:
            probs_u = rescale(logits_u, kind)
            prior = sample_prior_onehots(self.streams.prior, probs_u.shape[0], probs_u.shape[1],
                                         self.prior_frequencies)
            disc_loss = loss_critic_disc(probs_u, prior, self.discriminator)
            record["disc"] = self._check("discriminator", disc_loss)
            record["jsd"] = jsd_from_critic_loss(record["disc"])
            critic_term = loss_critic_model(probs_u, self.discriminator, self.cfg.critic_form)
            record["critic"] = self._check("critic", critic_term)

        denom = logits_u if self.cfg.denominator == "unlabelled" else None
        sup = self.supervised(SupervisedBatch(logits_l, batch.labels), denom)
        record["supervised"] = self._check("supervised", sup)

        latent_term = None
        if w.lambda_latent > 0:
            result = loss_latent_supervised(z_l, batch.labels, self.streams.pairing, self.cfg.infonce_scale)
            latent_term = result.loss
            record["latent"] = self._check("latent", latent_term)
            record["degenerate"] = result.degenerate
            record["skipped_anchors"] = result.n_skipped
            if result.n_skipped:
                logger.warning("step %d: %d latent anchors without a same-class partner", self.step, result.n_skipped)

        augment_term = None
        if w.lambda_augment > 0:
            augmented = augment(batch.unlabelled_images, self.augment_cfg, self.streams.augment, self.flip_allowed)
            with no_grad():
                targets = encoder_forward(self.model.encoder, self._inputs(augmented), train_mode=False)
            augment_term = loss_latent_augment(z_u, targets, self.cfg.infonce_scale)
            record["augment"] = self._check("augment", augment_term)

        total = loss_total(sup, critic_term, latent_term, augment_term, w)
        record["total"] = self._check("total", total)

        # Every term is finite here; only now may either optimizer move.
        self.model_opt.zero_grad()
        total.backward()
        if disc_loss is not None:
            self.disc_opt.zero_grad()
            disc_loss.backward()
            self.disc_opt.step(lr=self._lr(self.disc_opt.lr))
        self.model_opt.step(lr=record["lr"])
        self.step += 1
        logger.debug("step %d: %s", record["step"], record)
        return record

    # -- full run ----------------------------------------------------------

    def fit(self, train_set: Dataset, test_set: Dataset, run_dir: Optional[Path] = None) -> RunMetrics:
        """Seeded run: stratified subset, epochs over the unlabelled stream, per-epoch test accuracy."""
        started = time.perf_counter()
        self.flip_allowed = train_set.flip_allowed
        self.build(train_set.sample_shape, train_set.n_classes)
        subset = stratified_subset(train_set, self.cfg.subset_size, self.streams.subset)
        if self.cfg.prior == "empirical":
            self.prior_frequencies = subset.frequencies()
        sampler = DualSampler(train_set, subset, self.cfg.batch_size, self.streams.sampler,
                              self.cfg.labelled_batch or None)
        writer = MetricsWriter(run_dir) if run_dir is not None else None
        metrics = RunMetrics(seed=self.seed)

        for epoch in range(self.cfg.epochs):
            for batch in sampler.epoch():
                record = self.train_step(batch)
                record["epoch"] = epoch
                metrics.steps.append(record)
                metrics.degenerate_batches += int(record.get("degenerate", False))
                metrics.skipped_anchors += record.get("skipped_anchors", 0)
                if writer:
                    writer.write(record)
            accuracy = evaluate_accuracy(self.model, test_set, self.cfg.eval_batch_size)
            metrics.epoch_accuracy.append(accuracy)
            if writer:
                writer.write({"epoch": epoch, "test_accuracy": accuracy})
            logger.info("seed %d epoch %d/%d: test accuracy %.4f", self.seed, epoch + 1, self.cfg.epochs, accuracy)

        metrics.wall_time = time.perf_counter() - started
        if writer:
            save_checkpoint(writer.run_dir / "model.ckpt", full_state(self.model, self.discriminator))
            writer.write_summary(metrics, {"loss_variant": self.cfg.loss_variant,
                                           "rescale": self.cfg.rescale.value,
                                           "subset_size": self.cfg.subset_size,
                                           **self.cfg.weights.as_dict()})
        logger.info("seed %d finished in %.1fs, final accuracy %.4f", self.seed, metrics.wall_time,
                    metrics.final_accuracy)
        return metrics
