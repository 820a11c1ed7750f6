from dataclasses import replace

import numpy as np
import pytest

from data import gen_blobs, gen_blobs_test, sample_dual, stratified_subset, DualRng
from losses import CriticForm, LatentLossResult, LossWeights, loss_critic_model
from mi.densities import RescaleKind, rescale
from trainer import (MetricsWriter, NonFiniteLossError, RunMetrics, RunStreams, TrainConfig, Trainer,
                     build_networks, evaluate_accuracy, predict, resolve_configs)

ALL_TERMS = LossWeights(0.01, 0.1, 0.1)


@pytest.fixture
def blobs():
    return gen_blobs(4, 30, 2, 10.0, seed=0), gen_blobs_test(4, 10, 2, 10.0, seed=0)



@pytest.fixture
def trainer_factory(tiny_encoder_cfg, tiny_predictor_cfg, tiny_disc_cfg, no_augment):
    def factory(cfg, seed=42):
        return Trainer(cfg, seed, tiny_encoder_cfg, tiny_predictor_cfg, tiny_disc_cfg, no_augment)
    return factory


def one_batch(dataset, seed=0, n_l=8, n_u=16):
    subset = stratified_subset(dataset, 8, np.random.default_rng(seed))
    return sample_dual(dataset, subset, n_l, n_u, DualRng.from_seed(seed))


class TestTrainConfig:
    @pytest.mark.parametrize("kwargs", [
        {"epochs": 0}, {"base_lr": 0.0}, {"warmup_factor": 0.0}, {"seeds": ()},
        {"loss_variant": "focal"}, {"denominator": "both"}, {"prior": "zipf"}, {"precision": "float16"},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)

    def test_rescale_from_string(self):
        assert TrainConfig(rescale="sigmoid").rescale == RescaleKind.SIGMOID

    def test_dtype(self):
        assert TrainConfig(precision="float32").dtype == np.float32


class TestNetworks:
    def test_configs_follow_the_dataset(self, tiny_encoder_cfg, tiny_predictor_cfg, tiny_disc_cfg):
        enc, pred, disc = resolve_configs(tiny_encoder_cfg, tiny_predictor_cfg, tiny_disc_cfg, (4, 4), 7)
        assert enc.input_dim == 16 and enc.image_shape == (4, 4)
        assert pred.latent_dim == enc.latent_dim and pred.n_classes == 7
        assert disc.input_dim == 7

    def test_same_seed_same_weights(self, tiny_encoder_cfg, tiny_predictor_cfg, tiny_disc_cfg):
        cfgs = resolve_configs(tiny_encoder_cfg, tiny_predictor_cfg, tiny_disc_cfg, (2,), 3)
        streams = RunStreams.from_seed(5), RunStreams.from_seed(5)
        a, b = (build_networks(*cfgs, s.init, s.dropout) for s in streams)
        for (name, x), (_, y) in zip(a[0].named_parameters(), b[0].named_parameters()):
            np.testing.assert_array_equal(x.data, y.data, err_msg=name)


class TestTrainStep:
    def test_needs_build(self, trainer_factory, tiny_train_cfg, blobs):
        with pytest.raises(RuntimeError):
            trainer_factory(tiny_train_cfg).train_step(one_batch(blobs[0]))

    def test_baseline_leaves_the_discriminator_alone(self, trainer_factory, tiny_train_cfg, blobs):
        trainer = trainer_factory(tiny_train_cfg)
        trainer.build((2,), 4)
        before = trainer.discriminator.state_dict()
        model_before = trainer.model.state_dict()
        record = trainer.train_step(one_batch(blobs[0]))
        for name, value in trainer.discriminator.state_dict().items():
            np.testing.assert_array_equal(value, before[name])
        assert any(not np.array_equal(v, model_before[k]) for k, v in trainer.model.state_dict().items())
        assert set(record) == {"step", "lr", "supervised", "total"}
        assert record["total"] == record["supervised"]

    def test_every_term_is_recorded(self, trainer_factory, tiny_train_cfg, blobs):
        trainer = trainer_factory(replace(tiny_train_cfg, loss_variant="bin-cross", weights=ALL_TERMS))
        trainer.build((2,), 4)
        before = trainer.discriminator.state_dict()
        record = trainer.train_step(one_batch(blobs[0]))
        assert {"disc", "jsd", "critic", "latent", "augment", "degenerate", "skipped_anchors"} <= set(record)
        assert all(np.isfinite(record[k]) for k in ("disc", "critic", "latent", "augment", "total"))
        changed = [not np.array_equal(v, before[k]) for k, v in trainer.discriminator.state_dict().items()]
        assert any(changed)

    def test_learning_rate_warms_up(self, trainer_factory, tiny_train_cfg, blobs):
        trainer = trainer_factory(tiny_train_cfg)
        trainer.build((2,), 4)
        rates = [trainer.train_step(one_batch(blobs[0], seed=i))["lr"] for i in range(7)]
        assert rates[0] == pytest.approx(tiny_train_cfg.base_lr * tiny_train_cfg.warmup_factor)
        assert rates[5] == rates[6] == tiny_train_cfg.base_lr

    def test_cat_twin_uses_the_unlabelled_denominator(self, trainer_factory, tiny_train_cfg, blobs):
        record = None
        for denominator in ("unlabelled", "labelled"):
            trainer = trainer_factory(replace(tiny_train_cfg, loss_variant="cat-twin", denominator=denominator))
            trainer.build((2,), 4)
            value = trainer.train_step(one_batch(blobs[0]))["supervised"]
            assert np.isfinite(value)
            if record is not None:
                assert value != pytest.approx(record)
            record = value

    def test_non_finite_loss_aborts(self, trainer_factory, tiny_train_cfg, blobs):
        trainer = trainer_factory(tiny_train_cfg)
        trainer.build((2,), 4)
        trainer.model.predictor.parameters()[-1].data[:] = np.nan
        with pytest.raises(NonFiniteLossError) as info:
            trainer.train_step(one_batch(blobs[0]))
        assert info.value.component == "supervised"

    def test_late_non_finite_term_moves_no_parameters(self, trainer_factory, tiny_train_cfg, blobs, monkeypatch):
        def nan_latent(latents, labels, rng, scale=1.0):
            return LatentLossResult(latents.sum() * np.nan)

        monkeypatch.setattr("trainer.loop.loss_latent_supervised", nan_latent)
        trainer = trainer_factory(replace(tiny_train_cfg, weights=ALL_TERMS))
        trainer.build((2,), 4)
        disc_before = trainer.discriminator.state_dict()
        model_before = trainer.model.state_dict()
        with pytest.raises(NonFiniteLossError) as info:
            trainer.train_step(one_batch(blobs[0]))
        assert info.value.component == "latent"
        for name, value in trainer.discriminator.state_dict().items():
            np.testing.assert_array_equal(value, disc_before[name])
        for name, value in trainer.model.state_dict().items():
            np.testing.assert_array_equal(value, model_before[name])
        assert trainer.step == 0

    def test_critic_term_sees_the_discriminator_before_its_update(self, trainer_factory, tiny_train_cfg, blobs):
        trainer = trainer_factory(replace(tiny_train_cfg, weights=LossWeights(1.0, 0.0, 0.0)))
        trainer.build((2,), 4)
        batch = one_batch(blobs[0])
        frozen = trainer_factory(replace(tiny_train_cfg, weights=LossWeights(1.0, 0.0, 0.0)))
        frozen.build((2,), 4)
        record = trainer.train_step(batch)
        frozen.model.train()
        frozen.model(frozen._inputs(batch.labelled_images))
        _, logits_u = frozen.model(frozen._inputs(batch.unlabelled_images))
        expected = loss_critic_model(rescale(logits_u, tiny_train_cfg.rescale), frozen.discriminator)
        assert record["critic"] == pytest.approx(expected.item())

    @pytest.mark.parametrize("form", list(CriticForm))
    def test_critic_form_is_configurable(self, trainer_factory, tiny_train_cfg, blobs, form):
        trainer = trainer_factory(replace(tiny_train_cfg, weights=ALL_TERMS, critic_form=form))
        trainer.build((2,), 4)
        record = trainer.train_step(one_batch(blobs[0]))
        assert np.isfinite(record["critic"])
        if form is CriticForm.NON_SATURATING:
            assert record["critic"] > 0.0
        else:
            assert record["critic"] < 0.0

    def test_float32_run(self, trainer_factory, tiny_train_cfg, blobs):
        trainer = trainer_factory(replace(tiny_train_cfg, precision="float32", weights=ALL_TERMS))
        trainer.build((2,), 4)
        trainer.train_step(one_batch(blobs[0]))
        assert all(p.dtype == np.float32 for p in trainer.model.parameters())


class TestFit:
    def test_same_seed_gives_identical_files(self, trainer_factory, tiny_train_cfg, blobs, tmp_path):
        cfg = replace(tiny_train_cfg, weights=ALL_TERMS)
        for name in ("a", "b"):
            trainer_factory(cfg).fit(*blobs, run_dir=tmp_path / name)
        for filename in ("metrics.jsonl", "summary.json", "model.ckpt"):
            assert (tmp_path / "a" / filename).read_bytes() == (tmp_path / "b" / filename).read_bytes()

    def test_different_seeds_differ(self, trainer_factory, tiny_train_cfg, blobs):
        a = trainer_factory(tiny_train_cfg, seed=1).fit(*blobs)
        b = trainer_factory(tiny_train_cfg, seed=2).fit(*blobs)
        assert [s["total"] for s in a.steps] != [s["total"] for s in b.steps]

    def test_metrics_shape(self, trainer_factory, tiny_train_cfg, blobs):
        cfg = replace(tiny_train_cfg, epochs=2)
        metrics = trainer_factory(cfg).fit(*blobs)
        assert len(metrics.epoch_accuracy) == 2
        assert len(metrics.steps) == 2 * -(-len(blobs[0]) // cfg.batch_size)
        assert 0.0 <= metrics.final_accuracy <= 1.0
        assert "wall_time" not in metrics.summary()

    def test_training_beats_chance(self, trainer_factory, tiny_train_cfg, blobs):
        cfg = replace(tiny_train_cfg, epochs=8, base_lr=1e-2)
        assert trainer_factory(cfg).fit(*blobs).final_accuracy > 0.4

    @pytest.mark.slow
    def test_well_separated_blobs(self, tiny_encoder_cfg, tiny_predictor_cfg, tiny_disc_cfg, no_augment):
        train, test = gen_blobs(10, 100, 2, 10.0, seed=0), gen_blobs_test(10, 50, 2, 10.0, seed=0)
        cfg = TrainConfig(epochs=30, batch_size=64, base_lr=3e-3, warmup_steps=20, subset_size=100)
        metrics = Trainer(cfg, 42, tiny_encoder_cfg, tiny_predictor_cfg, tiny_disc_cfg, no_augment).fit(train, test)
        assert metrics.final_accuracy > 0.95


class TestEvaluation:
    def test_constant_prediction_on_balanced_data(self, trainer_factory, tiny_train_cfg, blobs):
        trainer = trainer_factory(tiny_train_cfg)
        trainer.build((2,), 4)
        last = trainer.model.predictor.net.layers[-1]
        last.weight.data[:] = 0.0
        last.bias.data[:] = [0.0, 5.0, 0.0, 0.0]
        test = blobs[1]
        assert evaluate_accuracy(trainer.model, test) == pytest.approx(0.25)
        assert set(predict(trainer.model, test.images, batch_size=7)) == {1}

    def test_prediction_restores_training_mode(self, trainer_factory, tiny_train_cfg, blobs):
        trainer = trainer_factory(tiny_train_cfg)
        trainer.build((2,), 4)
        trainer.model.train()
        predict(trainer.model, blobs[1].images)
        assert trainer.model.training

    def test_empty_test_set(self, trainer_factory, tiny_train_cfg, blobs):
        trainer = trainer_factory(tiny_train_cfg)
        trainer.build((2,), 4)
        with pytest.raises(ValueError):
            evaluate_accuracy(trainer.model, blobs[1].subset([]))


def test_metrics_writer(tmp_path):
    writer = MetricsWriter(tmp_path / "run")
    writer.write({"step": 0, "total": 1.5})
    writer.write({"epoch": 0, "test_accuracy": 0.5})
    metrics = RunMetrics(seed=3, epoch_accuracy=[0.5], wall_time=12.0)
    path = writer.write_summary(metrics, {"loss_variant": "bin-cross"})
    lines = writer.metrics_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == '{"step": 0, "total": 1.5}'
    text = path.read_text(encoding="utf-8")
    assert '"final_accuracy": 0.5' in text and "wall_time" not in text and "bin-cross" in text
