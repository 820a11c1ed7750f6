import pytest

from config import Config, ConfigError, RunConfig, load_run_config, parse_run_config
from mi.densities import RescaleKind


MINIMAL = """
[train]
epochs = 2
seeds = 1, 2
rescale = sigmoid
loss_variant = bin-cross

[weights]
lambda_critic = 0.001

[encoder]
dropout_p = 0.0
freeze_backbone = yes

[augment]
crop_scale = 0.5, 0.9
horizontal_flip = off

[ablation]
subset_sizes = 10, 20
final_rescale = sigmoid

[output]
dir = /tmp/somewhere
"""


class TestParse:
    def test_defaults_when_empty(self):
        cfg = parse_run_config("")
        assert cfg == RunConfig()
        assert cfg.train.seeds == Config.DEFAULT_SEEDS

    def test_values_are_coerced(self):
        cfg = parse_run_config(MINIMAL)
        assert cfg.train.epochs == 2 and cfg.train.seeds == (1, 2)
        assert cfg.train.rescale == RescaleKind.SIGMOID
        assert cfg.weights.lambda_critic == 0.001 and cfg.train.weights is cfg.weights
        assert cfg.encoder.freeze_backbone is True and cfg.encoder.dropout_p == 0.0
        assert cfg.augment.crop_scale == (0.5, 0.9) and cfg.augment.horizontal_flip is False
        assert cfg.ablation.subset_sizes == (10, 20)
        assert cfg.output_dir == "/tmp/somewhere"

    def test_ini_round_trip(self):
        cfg = parse_run_config(MINIMAL)
        assert parse_run_config(cfg.to_ini()) == cfg

    def test_shipped_configs_load(self):
        for path in sorted(Config.CONFIGS_DIR.glob("*.ini")):
            assert isinstance(load_run_config(path), RunConfig)

    def test_ablation_config_runs_at_reference_scale(self):
        cfg = load_run_config(Config.CONFIGS_DIR / "blobs_ablation.ini")
        assert cfg.dataset.n_classes == 10
        assert cfg.dataset.n_classes * cfg.dataset.n_per_class == 10_000
        assert cfg.ablation.subset_sizes == (100, 1000)
        assert len(cfg.train.seeds) == 3
        assert cfg.ablation.tune_weights


class TestErrors:
    @pytest.mark.parametrize("text, message", [
        ("[training]\nepochs = 1\n", r"unknown section \[training\]"),
        ("[train]\nepoch = 1\n", r"unknown key \[train\] epoch"),
        ("[train]\nweights = 1\n", r"unknown key \[train\] weights"),
        ("[output]\npath = x\n", r"unknown key \[output\] path"),
        ("[train]\nepochs = many\n", r"\[train\] epochs: cannot read"),
        ("[train]\nrescale = tanh\n", r"\[train\] rescale: cannot read"),
        ("[encoder]\nfreeze_backbone = maybe\n", "cannot read"),
        ("[augment]\ncrop_scale = 0.5\n", "expects 2 comma-separated values"),
        ("[train]\nepochs = 0\n", r"\[train\] train.epochs must be positive"),
        ("[weights]\nlambda_latent = -1\n", r"\[weights\] lambda_latent"),
        ("[dataset]\nkind = svhn\n", "Unknown dataset kind"),
        ("epochs = 1\n", "MissingSectionHeader|no section headers"),
    ])
    def test_bad_config(self, text, message):
        with pytest.raises(ConfigError, match=message):
            parse_run_config(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="config not found"):
            load_run_config(tmp_path / "absent.ini")

    def test_config_error_is_a_value_error(self):
        assert issubclass(ConfigError, ValueError)


def test_run_dirs_are_created(tmp_path):
    run_dir = Config.get_run_dir("seed-7", tmp_path)
    ablation_dir = Config.get_ablation_dir("sequence", tmp_path / "ab")
    assert run_dir.is_dir() and run_dir.name == "seed-7"
    assert ablation_dir.is_dir()
