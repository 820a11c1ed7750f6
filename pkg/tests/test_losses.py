import numpy as np
import pytest
from numpy.testing import assert_allclose

from losses import (BinCrossLoss, CatCrossLoss, CatTwinLoss, CriticForm, DenominatorAxis, LatentPairBatch,
                    LossWeights, SupervisedBatch, get_supervised_loss, jsd_from_critic_loss,
                    loss_bin_cross, loss_cat_cross, loss_cat_twin, loss_critic_disc, loss_critic_model,
                    loss_infonce, loss_latent_augment, loss_latent_supervised, loss_total,
                    loss_twin_nce, sample_prior_onehots)
from mi.densities import RescaleKind
from mi.oracles import LOG2, exact_jsd
from nn.networks import Discriminator, DiscriminatorConfig
from nn.optim import AdamW
from nn.tensor import Tensor

SOFTMAX, SIGMOID = RescaleKind.SOFTMAX, RescaleKind.SIGMOID


def logits_with_class0_probs(probs):
    """Two-class logits whose softmax puts ``p`` on class 0."""
    probs = np.asarray(probs)
    return np.stack([np.log(probs), np.log(1.0 - probs)], axis=1)


class ConstantDiscriminator(Discriminator):
    """Outputs a fixed logit: D = sigmoid(logit) everywhere."""

    def __init__(self, n_classes: int, logit: float = 0.0):
        super().__init__(DiscriminatorConfig(input_dim=n_classes, hidden=2), np.random.default_rng(0))
        self.logit = logit

    def forward(self, y):
        y = y if isinstance(y, Tensor) else Tensor(np.asarray(y))
        return (y.sum(axis=1) * 0.0) + self.logit


class TestBatches:
    def test_labels_must_match_rows(self):
        with pytest.raises(ValueError):
            SupervisedBatch(np.zeros((3, 2)), [0, 1])

    def test_labels_in_range(self):
        with pytest.raises(ValueError):
            SupervisedBatch(np.zeros((2, 2)), [0, 2])

    def test_empty_batch(self):
        with pytest.raises(ValueError):
            SupervisedBatch(np.zeros((0, 2)), [])

    def test_latent_targets_are_detached(self, rng):
        anchors = Tensor(rng.normal(size=(3, 2)), requires_grad=True)
        pairs = LatentPairBatch(anchors, anchors * 2.0)
        assert not pairs.targets.requires_grad

    def test_latent_shapes_must_match(self, rng):
        with pytest.raises(ValueError):
            LatentPairBatch(rng.normal(size=(3, 2)), rng.normal(size=(2, 2)))

    @pytest.mark.parametrize("weights", [(-0.1, 0, 0), (0, np.nan, 0), (0, 0, np.inf)])
    def test_weights_must_be_finite_and_non_negative(self, weights):
        with pytest.raises(ValueError):
            LossWeights(*weights)


class TestCatCross:
    def test_uniform_softmax(self):
        batch = SupervisedBatch(np.zeros((4, 10)), [0, 3, 5, 9])
        assert loss_cat_cross(batch, SOFTMAX).item() == pytest.approx(np.log(10.0), abs=1e-12)

    def test_reference_row(self):
        batch = SupervisedBatch(np.array([[2.0, 1.0, 0.0]]), [0])
        assert loss_cat_cross(batch, SOFTMAX).item() == pytest.approx(0.4076059, abs=1e-7)

    def test_large_margin_goes_to_zero(self):
        batch = SupervisedBatch(np.array([[60.0, 0.0, 0.0]]), [0])
        for kind in RescaleKind:
            assert loss_cat_cross(batch, kind).item() == pytest.approx(0.0, abs=1e-12)

    def test_non_negative(self, rng):
        batch = SupervisedBatch(rng.normal(0.0, 5.0, size=(8, 4)), rng.integers(0, 4, size=8))
        for kind in RescaleKind:
            assert loss_cat_cross(batch, kind).item() >= 0.0


class TestCatTwin:
    def test_identical_rows_cancel(self, rng):
        logits = np.tile(rng.normal(size=4), (5, 1))
        batch = SupervisedBatch(logits, [0, 1, 2, 3, 0])
        for kind in RescaleKind:
            assert loss_cat_twin(batch, batch.logits, kind).item() == pytest.approx(0.0, abs=1e-12)

    def test_single_row_against_itself_is_zero(self, rng):
        batch = SupervisedBatch(rng.normal(0.0, 4.0, size=(1, 6)), [2])
        for kind in RescaleKind:
            assert loss_cat_twin(batch, batch.logits, kind).item() == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("kind", list(RescaleKind))
    def test_single_row_gradient_vanishes(self, rng, kind):
        logits = Tensor(rng.normal(0.0, 4.0, size=(1, 6)), requires_grad=True)
        batch = SupervisedBatch(logits, [2])
        loss_cat_twin(batch, logits, kind).backward()
        np.testing.assert_array_equal(logits.grad, 0.0)

    def test_two_row_reference(self):
        batch = SupervisedBatch(logits_with_class0_probs([0.9, 0.5]), [0, 0])
        expected = -np.mean([np.log(0.9 / 0.7), np.log(0.5 / 0.7)])
        assert loss_cat_twin(batch, batch.logits, SOFTMAX).item() == pytest.approx(expected, abs=1e-12)

    def test_denominator_class_count(self, rng):
        batch = SupervisedBatch(rng.normal(size=(2, 3)), [0, 1])
        with pytest.raises(ValueError):
            loss_cat_twin(batch, Tensor(rng.normal(size=(4, 2))), SOFTMAX)

    def test_empty_denominator(self, rng):
        batch = SupervisedBatch(rng.normal(size=(2, 3)), [0, 1])
        with pytest.raises(ValueError):
            loss_cat_twin(batch, Tensor(np.zeros((0, 3))), SOFTMAX)

    def test_strategy_reuses_the_labelled_batch_without_a_denominator(self, rng):
        batch = SupervisedBatch(rng.normal(size=(3, 4)), [0, 1, 1])
        loss = CatTwinLoss(SIGMOID)
        assert loss(batch).item() == pytest.approx(loss_cat_twin(batch, batch.logits, SIGMOID).item())


class TestBinCross:
    @pytest.mark.parametrize("kind", list(RescaleKind))
    def test_zero_logits(self, kind):
        batch = SupervisedBatch(np.zeros((1, 2)), [0])
        assert loss_bin_cross(batch, kind).item() == pytest.approx(2 * np.log(2.0), abs=1e-12)

    def test_reference_sigmoid(self):
        batch = SupervisedBatch(np.array([[3.0, -3.0]]), [0])
        assert loss_bin_cross(batch, SIGMOID).item() == pytest.approx(2 * np.log1p(np.exp(-3.0)), abs=1e-12)

    def test_uniform_ten_classes(self):
        batch = SupervisedBatch(np.zeros((2, 10)), [1, 7])
        expected = -(np.log(0.1) + 9 * np.log(0.9))
        assert loss_bin_cross(batch, SOFTMAX).item() == pytest.approx(expected, abs=1e-12)

    def test_at_least_cat_cross(self, rng):
        batch = SupervisedBatch(rng.normal(0.0, 3.0, size=(6, 5)), rng.integers(0, 5, size=6))
        for kind in RescaleKind:
            assert loss_bin_cross(batch, kind).item() >= loss_cat_cross(batch, kind).item() - 1e-12


class TestStrategySelection:
    @pytest.mark.parametrize("variant, cls", [("cat-cross", CatCrossLoss), ("cat-twin", CatTwinLoss),
                                              ("bin-cross", BinCrossLoss)])
    def test_known_variants(self, variant, cls):
        loss = get_supervised_loss(variant, "sigmoid")
        assert isinstance(loss, cls) and loss.name == variant and loss.kind == SIGMOID

    def test_unknown_variant(self):
        with pytest.raises(ValueError, match="Unknown loss variant"):
            get_supervised_loss("focal")


class TestCritic:
    def test_uninformative_discriminator(self, rng):
        disc = ConstantDiscriminator(3)
        probs = rng.dirichlet(np.ones(3), size=5)
        prior = sample_prior_onehots(rng, 7, 3)
        assert loss_critic_disc(probs, prior, disc).item() == pytest.approx(2 * LOG2, abs=1e-12)
        assert loss_critic_model(probs, disc).item() == pytest.approx(np.log(0.5), abs=1e-12)
        assert jsd_from_critic_loss(2 * LOG2) == pytest.approx(0.0, abs=1e-15)

    def test_disjoint_outputs_reach_log_two(self):
        # prior always class 0, model always class 1; the optimal critic drives its loss to 0
        p, q = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        assert jsd_from_critic_loss(0.0) == pytest.approx(exact_jsd(p, q))

    def test_discriminator_learns_to_separate(self, rng):
        disc = Discriminator(DiscriminatorConfig(input_dim=2, hidden=8), rng)
        opt = AdamW(disc.parameters(), lr=0.01, weight_decay=0.0)
        model = np.tile([0.0, 1.0], (16, 1))
        prior = np.tile([1.0, 0.0], (16, 1))
        for _ in range(300):
            opt.zero_grad()
            loss = loss_critic_disc(Tensor(model), prior, disc)
            loss.backward()
            opt.step()
        assert jsd_from_critic_loss(loss.item()) > 0.9 * LOG2

    def test_disc_loss_sends_no_gradient_to_the_model(self, rng):
        disc = Discriminator(DiscriminatorConfig(input_dim=3, hidden=4), rng)
        logits = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
        probs = logits * 1.0
        loss_critic_disc(probs, sample_prior_onehots(rng, 4, 3), disc).backward()
        assert logits.grad is None
        assert all(p.grad is not None for p in disc.parameters())

    def test_model_loss_sends_no_gradient_to_the_discriminator(self, rng):
        disc = Discriminator(DiscriminatorConfig(input_dim=3, hidden=4), rng)
        logits = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
        loss_critic_model(logits * 1.0, disc).backward()
        assert logits.grad is not None
        assert all(p.grad is None for p in disc.parameters())

    def test_non_saturating_form_at_an_uninformative_discriminator(self, rng):
        probs = rng.dirichlet(np.ones(3), size=5)
        loss = loss_critic_model(probs, ConstantDiscriminator(3), CriticForm.NON_SATURATING)
        assert loss.item() == pytest.approx(LOG2, abs=1e-12)

    def test_non_saturating_gradient_survives_a_confident_discriminator(self):
        class Rejecting(ConstantDiscriminator):
            def forward(self, y):
                return y.sum(axis=1) * 10.0 - 30.0

        disc = Rejecting(3)
        grads = {}
        for form in CriticForm:
            probs = Tensor(np.full((4, 3), 1.0 / 3), requires_grad=True)
            loss_critic_model(probs, disc, form).backward()
            grads[form] = np.abs(probs.grad).max()
        assert grads[CriticForm.MINIMAX] < 1e-6
        assert grads[CriticForm.NON_SATURATING] > 0.5

    def test_unknown_critic_form(self, rng):
        with pytest.raises(ValueError):
            loss_critic_model(np.full((2, 3), 1.0 / 3), ConstantDiscriminator(3), "wasserstein")

    def test_prior_samples_are_one_hot(self, rng):
        samples = sample_prior_onehots(rng, 50, 4, frequencies=[0.0, 1.0, 1.0, 2.0])
        assert_allclose(samples.sum(axis=1), 1.0)
        assert samples[:, 0].sum() == 0.0

    def test_prior_frequencies_must_match(self, rng):
        with pytest.raises(ValueError):
            sample_prior_onehots(rng, 5, 3, frequencies=[1.0, 1.0])

    def test_prior_class_count_must_match(self, rng):
        disc = Discriminator(DiscriminatorConfig(input_dim=3, hidden=4), rng)
        with pytest.raises(ValueError):
            loss_critic_disc(rng.dirichlet(np.ones(3), size=2), np.eye(2), disc)


class TestInfoNCE:
    @pytest.mark.parametrize("axis", list(DenominatorAxis))
    def test_zero_scores(self, axis):
        assert loss_infonce(np.zeros((4, 4)), axis).item() == pytest.approx(0.0, abs=1e-12)

    def test_two_by_two_reference(self):
        scores = np.array([[10.0, 0.0], [0.0, 10.0]])
        expected = -np.log(2.0 / (1.0 + np.exp(-10.0)))
        assert loss_infonce(scores).item() == pytest.approx(expected, abs=1e-12)

    def test_single_pair(self, rng):
        assert loss_infonce(rng.normal(size=(1, 1))).item() == pytest.approx(0.0, abs=1e-12)

    def test_axes_differ_on_asymmetric_scores(self):
        scores = np.array([[2.0, 1.0], [-3.0, 0.0]])
        rows = loss_infonce(scores, DenominatorAxis.OVER_TARGETS).item()
        cols = loss_twin_nce(scores).item()
        assert rows == pytest.approx(loss_infonce(scores.T, DenominatorAxis.OVER_SOURCES).item())
        assert rows != pytest.approx(cols)

    def test_floor_is_minus_log_n(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 10))
            scores = rng.normal(0.0, 8.0, size=(n, n))
            for axis in DenominatorAxis:
                assert loss_infonce(scores, axis).item() >= -np.log(n) - 1e-12

    def test_scale_multiplies_scores(self, rng):
        scores = rng.normal(size=(3, 3))
        assert loss_infonce(scores, scale=2.0).item() == pytest.approx(loss_infonce(2.0 * scores).item())

    def test_needs_square_scores(self):
        with pytest.raises(ValueError):
            loss_infonce(np.zeros((2, 3)))


class TestLatentLosses:
    def test_identical_latents_of_one_class(self, rng):
        latents = np.tile([1.0, 2.0, 3.0], (4, 1))
        result = loss_latent_supervised(latents, [1, 1, 1, 1], rng)
        assert result.loss.item() == pytest.approx(0.0, abs=1e-12)
        assert not result.degenerate and result.n_skipped == 0

    def test_two_orthogonal_classes(self, rng):
        latents = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        result = loss_latent_supervised(latents, [0, 0, 1, 1], rng)
        # every row scores 1 against both members of its class and 0 against the other class
        expected = -np.log(2 * np.e / (np.e + 1.0))
        assert result.loss.item() == pytest.approx(expected, abs=1e-12)

    def test_singletons_only(self, rng):
        result = loss_latent_supervised(rng.normal(size=(3, 2)), [0, 1, 2], rng)
        assert result.degenerate and result.n_skipped == 3 and result.loss.item() == 0.0

    def test_singleton_anchor_is_skipped(self, rng):
        result = loss_latent_supervised(rng.normal(size=(3, 2)), [0, 0, 1], rng)
        assert not result.degenerate and result.n_skipped == 1

    def test_singleton_rows_remain_negatives(self, rng):
        latents = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        result = loss_latent_supervised(latents, [0, 0, 1], rng)
        assert result.n_skipped == 1
        assert result.loss.item() == pytest.approx(np.log((2 * np.e + 1.0) / 3.0) - 1.0, abs=1e-12)
        latents[2] = [1.0, 0.0]
        assert loss_latent_supervised(latents, [0, 0, 1], rng).loss.item() == pytest.approx(0.0, abs=1e-12)

    def test_gradient_reaches_anchors_only(self, rng):
        latents = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
        loss_latent_supervised(latents, [0, 0, 1, 2], rng).loss.backward()
        assert np.any(latents.grad[:2] != 0.0)
        np.testing.assert_array_equal(latents.grad[2:], 0.0)

    def test_augment_identity(self):
        latents = np.tile([0.5, -1.0], (3, 1))
        assert loss_latent_augment(latents, latents).item() == pytest.approx(0.0, abs=1e-12)

    def test_augment_orthonormal_pair(self):
        latents = np.eye(2)
        expected = -np.log(2 * np.e / (np.e + 1.0))
        assert loss_latent_augment(latents, latents).item() == pytest.approx(expected, abs=1e-12)

    def test_augment_single_row(self, rng):
        latents = rng.normal(size=(1, 4))
        assert loss_latent_augment(latents, rng.normal(size=(1, 4))).item() == pytest.approx(0.0, abs=1e-12)

    def test_augment_targets_receive_no_gradient(self, rng):
        anchors = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
        targets = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
        loss_latent_augment(anchors, targets).backward()
        assert anchors.grad is not None and targets.grad is None


class TestTotal:
    def test_zero_weights_give_the_supervised_term(self):
        assert loss_total(1.5, None, None, None, LossWeights()).item() == 1.5

    def test_unit_weights_add_up(self):
        assert loss_total(1.0, 2.0, 3.0, 4.0, LossWeights(1.0, 1.0, 1.0)).item() == pytest.approx(10.0)

    def test_reported_weights(self):
        value = loss_total(1.0, 2.0, 3.0, 4.0, LossWeights(0.001, 0.1, 0.1)).item()
        assert value == pytest.approx(1.0 + 0.002 + 0.3 + 0.4)

    def test_weighted_term_must_be_present(self):
        with pytest.raises(ValueError, match="latent"):
            loss_total(1.0, None, None, None, LossWeights(lambda_latent=0.1))

    def test_gradient_reaches_every_weighted_term(self, rng):
        parts = [Tensor(np.array(v), requires_grad=True) for v in (1.0, 2.0, 3.0, 4.0)]
        loss_total(*parts, LossWeights(0.5, 0.25, 0.0)).backward()
        assert [float(p.grad) for p in parts[:3]] == [1.0, 0.5, 0.25]
        assert parts[3].grad is None
