import gzip
import struct

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from data import (AugmentationConfig, Dataset, DatasetConfig, DualRng, DualSampler, IdxFormatError,
                  IdxLoader, augment, blob_centres, gen_blobs, gen_blobs_test, get_loader, load_idx,
                  load_idx_images, sample_dual, stratified_subset, write_idx)


@pytest.fixture
def idx_files(tmp_path, rng):
    images = rng.integers(0, 256, size=(12, 4, 4), dtype=np.uint8)
    labels = np.arange(12) % 3
    paths = tmp_path / "images.idx", tmp_path / "labels.idx"
    write_idx(*paths, images, labels)
    return paths, images, labels


class TestIdx:
    def test_load(self, idx_files):
        (images_path, labels_path), images, labels = idx_files
        ds = load_idx(images_path, labels_path, n_classes=3)
        assert ds.images.shape == (12, 4, 4) and ds.is_image
        assert_allclose(ds.images, images / 255.0)
        assert_array_equal(ds.labels, labels)

    def test_gzip_is_detected_by_content(self, tmp_path, rng):
        images = rng.integers(0, 256, size=(3, 2, 2), dtype=np.uint8)
        write_idx(tmp_path / "i", tmp_path / "l", images, [0, 1, 0], compress=True)
        assert (tmp_path / "i").read_bytes()[:2] == b"\x1f\x8b"
        assert_array_equal(load_idx_images(tmp_path / "i"), images)

    def test_truncated_payload_names_both_sizes(self, idx_files):
        (images_path, labels_path), _, _ = idx_files
        images_path.write_bytes(images_path.read_bytes()[:-5])
        with pytest.raises(IdxFormatError, match="expected 192 bytes, got 187"):
            load_idx(images_path, labels_path, n_classes=3)

    def test_wrong_magic(self, idx_files):
        (images_path, labels_path), _, _ = idx_files
        with pytest.raises(IdxFormatError, match="magic"):
            load_idx_images(labels_path)

    def test_short_header(self, tmp_path):
        (tmp_path / "x").write_bytes(struct.pack(">i", 2051))
        with pytest.raises(IdxFormatError, match="header"):
            load_idx_images(tmp_path / "x")

    def test_count_mismatch(self, tmp_path, rng):
        write_idx(tmp_path / "i", tmp_path / "l", np.zeros((3, 2, 2)), [0, 1, 0])
        with gzip.open(tmp_path / "l2", "wb") as f:
            f.write(struct.pack(">2i", 2049, 2) + bytes([0, 1]))
        with pytest.raises(IdxFormatError, match="count mismatch"):
            load_idx(tmp_path / "i", tmp_path / "l2", n_classes=2)

    def test_loader_limits_the_training_split(self, tmp_path, rng):
        images = rng.integers(0, 256, size=(10, 2, 2), dtype=np.uint8)
        labels = np.arange(10) % 2
        cfg = DatasetConfig(kind="idx", n_classes=2, limit=4, train_images="a", train_labels="b",
                            test_images="a", test_labels="b")
        write_idx(tmp_path / "a", tmp_path / "b", images, labels)
        train, test = get_loader(cfg, tmp_path).load()
        assert len(train) == 4 and len(test) == 10

    def test_idx_loader_needs_a_directory(self):
        with pytest.raises(ValueError):
            IdxLoader(DatasetConfig(kind="idx"))


class TestBlobs:
    def test_same_seed_same_arrays(self):
        a, b = gen_blobs(4, 10, 3, 5.0, seed=3), gen_blobs(4, 10, 3, 5.0, seed=3)
        assert_array_equal(a.images, b.images)
        assert_array_equal(a.labels, b.labels)

    def test_balanced_and_shaped(self):
        ds = gen_blobs(5, 7, 2, 10.0, seed=0)
        assert ds.images.shape == (35, 2) and not ds.is_image
        assert_array_equal(ds.class_counts(), np.full(5, 7))

    def test_test_split_differs_from_train(self):
        train, test = gen_blobs(3, 5, 2, 10.0, 0), gen_blobs_test(3, 5, 2, 10.0, 0)
        assert not np.allclose(train.images, test.images)

    @pytest.mark.parametrize("n_classes, dim", [(10, 2), (4, 8), (3, 1)])
    def test_neighbouring_centres_are_separation_apart(self, n_classes, dim):
        centres = blob_centres(n_classes, dim, 10.0)
        distances = np.linalg.norm(centres[1:] - centres[:-1], axis=1)
        assert_allclose(distances, 10.0)

    def test_zero_separation_is_chance(self):
        assert_allclose(blob_centres(10, 2, 0.0), 0.0)

    def test_negative_separation(self):
        with pytest.raises(ValueError):
            blob_centres(3, 2, -1.0)

    def test_well_separated_blobs_are_nearly_linearly_separable(self):
        ds = gen_blobs(10, 200, 2, 10.0, seed=1)
        centres = blob_centres(10, 2, 10.0)
        nearest = np.argmin(((ds.images[:, None, :] - centres[None]) ** 2).sum(-1), axis=1)
        assert np.mean(nearest == ds.labels) > 0.99

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="Unknown dataset kind"):
            get_loader(DatasetConfig(kind="svhn"))


class TestSampling:
    def test_stratified_subset(self, rng):
        ds = gen_blobs(10, 30, 2, 10.0, 0)
        subset = stratified_subset(ds, 100, rng)
        assert_array_equal(subset.class_counts(), np.full(10, 10))
        assert_allclose(subset.frequencies(), 0.1)

    def test_uneven_subset_quotas_differ_by_one(self, rng):
        counts = stratified_subset(gen_blobs(4, 10, 2, 1.0, 0), 10, rng).class_counts()
        assert counts.sum() == 10 and counts.max() - counts.min() <= 1

    def test_subset_larger_than_a_class(self, rng):
        with pytest.raises(ValueError):
            stratified_subset(gen_blobs(2, 3, 2, 1.0, 0), 10, rng)

    def test_unlabelled_part_covers_the_dataset(self, rng):
        ds = gen_blobs(3, 4, 2, 1.0, 0)
        subset = stratified_subset(ds, 3, rng)
        batch = sample_dual(ds, subset, 5, len(ds), DualRng.from_seed(0))
        assert batch.n_unlabelled == len(ds) and batch.n_labelled == 5
        assert sorted(map(tuple, batch.unlabelled_images)) == sorted(map(tuple, ds.images))
        assert set(batch.labels) <= set(subset.labels)

    def test_sampler_epoch_visits_every_sample_once(self, rng):
        ds = gen_blobs(3, 7, 2, 1.0, 0)
        sampler = DualSampler(ds, stratified_subset(ds, 6, rng), batch_size=5, seed=1)
        batches = list(sampler.epoch())
        assert len(batches) == sampler.steps_per_epoch() == 5
        seen = np.concatenate([b.unlabelled_images for b in batches])
        assert sorted(map(tuple, seen)) == sorted(map(tuple, ds.images))
        assert all(b.n_labelled == 6 for b in batches)

    def test_sampler_is_deterministic_per_seed(self, rng):
        ds = gen_blobs(3, 7, 2, 1.0, 0)
        subset = stratified_subset(ds, 6, rng)
        first = [b.labels for b in DualSampler(ds, subset, 4, seed=9).epoch()]
        second = [b.labels for b in DualSampler(ds, subset, 4, seed=9).epoch()]
        for a, b in zip(first, second):
            assert_array_equal(a, b)

    def test_dataset_arrays_are_read_only_copies(self):
        source = np.zeros((2, 3))
        ds = Dataset(source, [0, 1], 2)
        source[0, 0] = 5.0
        assert ds.images[0, 0] == 0.0
        with pytest.raises(ValueError):
            ds.images[0, 0] = 1.0


class TestAugment:
    def test_disabled_is_identity(self, rng):
        images = rng.random((3, 6, 6))
        assert_allclose(augment(images, AugmentationConfig.disabled(), rng, flip_allowed=True), images)

    def test_vectors_get_noise_only(self, rng):
        vectors = rng.normal(size=(200, 3))
        cfg = AugmentationConfig(noise_sigma=0.5)
        out = augment(vectors, cfg, rng)
        assert out.shape == vectors.shape
        assert np.std(out - vectors) == pytest.approx(0.5, rel=0.1)

    def test_flip_never_applied_when_not_allowed(self, rng):
        image = np.tile(np.linspace(0.0, 1.0, 8), (8, 1))[None]
        cfg = AugmentationConfig(resize_crop=False, jitter=False, grayscale=False, blur=False,
                                 solarize=False, gaussian_noise=False, flip_p=1.0)
        assert_allclose(augment(image, cfg, rng, flip_allowed=False), image)
        assert_allclose(augment(image, cfg, rng, flip_allowed=True), image[:, :, ::-1])

    def test_full_pipeline_keeps_shape_and_range(self, rng):
        images = rng.random((4, 8, 8))
        out = augment(images, AugmentationConfig(), rng)
        assert out.shape == images.shape
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_same_generator_state_same_output(self):
        images = np.random.default_rng(0).random((2, 8, 8))
        a = augment(images, AugmentationConfig(), np.random.default_rng(5))
        b = augment(images, AugmentationConfig(), np.random.default_rng(5))
        assert_allclose(a, b)

    def test_input_is_not_modified(self, rng):
        images = rng.random((2, 6, 6))
        before = images.copy()
        augment(images, AugmentationConfig(), rng)
        assert_allclose(images, before)

    @pytest.mark.parametrize("kwargs", [{"crop_scale": (0.0, 1.0)}, {"flip_p": 1.5}, {"noise_sigma": -1.0}])
    def test_invalid_config(self, kwargs):
        with pytest.raises(ValueError):
            AugmentationConfig(**kwargs)
