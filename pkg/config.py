from pathlib import Path
from configparser import ConfigParser
from dataclasses import dataclass, field, fields
from enum import Enum
from io import StringIO
import logging
import os
import typing

from dotenv import load_dotenv

from data.augment import AugmentationConfig
from data.base import DatasetConfig
from losses.base import LossWeights
from nn.networks import DiscriminatorConfig, EncoderConfig, PredictorConfig
from trainer.config import AblationConfig, TrainConfig, DEFAULT_SEEDS

# Load variables from .env file if it exists
load_dotenv()

logger = logging.getLogger(__name__)


def _env_int(name: str):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError:
        logger.warning("ignoring %s=%r: not an integer", name, raw)
        return None


class Config:
    """Central paths and environment settings for training, ablation and verification runs."""

    # Base Directories
    BASE_DIR = Path(__file__).resolve().parent
    CONFIGS_DIR = BASE_DIR / "configs"
    EXECUTE_DIR = Path(os.getenv("MITURBO_OUTPUT_DIR", BASE_DIR / "execute"))

    # Output Directories
    RUNS_DIR = EXECUTE_DIR / "runs"
    ABLATION_DIR = EXECUTE_DIR / "ablation"
    VERIFY_DIR = EXECUTE_DIR / "verify"

    # Inputs
    IDX_DIR = Path(os.getenv("MITURBO_IDX_DIR", BASE_DIR / "idx"))

    # Settings (None when unset: the run config decides)
    THREADS = _env_int("MITURBO_THREADS")
    LOG_LEVEL = os.getenv("MITURBO_LOG_LEVEL", "INFO").upper()

    DEFAULT_SEEDS = DEFAULT_SEEDS
    LABELLED_BATCH_CAP = 128

    @classmethod
    def get_run_dir(cls, name: str, root: Path = None) -> Path:
        """Create and return the directory of one training run."""
        path = Path(root or cls.RUNS_DIR) / name
        path.mkdir(parents=True, exist_ok=True)
        return path

    @classmethod
    def get_ablation_dir(cls, name: str, root: Path = None) -> Path:
        path = Path(root or cls.ABLATION_DIR) / name
        path.mkdir(parents=True, exist_ok=True)
        return path


class ConfigError(ValueError):
    """Unreadable or invalid run configuration."""


# INI section -> RunConfig attribute
SECTIONS = {
    "train": "train",
    "weights": "weights",
    "encoder": "encoder",
    "predictor": "predictor",
    "discriminator": "discriminator",
    "dataset": "dataset",
    "augment": "augment",
    "ablation": "ablation",
}
TRUE_WORDS = ("1", "true", "yes", "on")
FALSE_WORDS = ("0", "false", "no", "off")


@dataclass
class RunConfig:
    """Everything one ``main.py`` invocation needs, read from a sectioned INI file."""

    train: TrainConfig = field(default_factory=TrainConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    predictor: PredictorConfig = field(default_factory=PredictorConfig)
    discriminator: DiscriminatorConfig = field(default_factory=DiscriminatorConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    augment: AugmentationConfig = field(default_factory=AugmentationConfig)
    ablation: AblationConfig = field(default_factory=AblationConfig)
    output_dir: str = ""

    @property
    def weights(self) -> LossWeights:
        return self.train.weights

    def section(self, name: str):
        if name == "weights":
            return self.train.weights
        return getattr(self, SECTIONS[name])

    def to_ini(self) -> str:
        parser = ConfigParser(interpolation=None)
        for name in SECTIONS:
            obj = self.section(name)
            parser[name] = {f.name: _format(getattr(obj, f.name)) for f in fields(obj)
                            if not (name == "train" and f.name == "weights")}
        parser["output"] = {"dir": self.output_dir}
        buf = StringIO()
        parser.write(buf)
        return buf.getvalue()


def _format(value) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def _coerce(raw: str, hint, where: str):
    origin = typing.get_origin(hint)
    try:
        if origin is tuple:
            args = typing.get_args(hint)
            items = [s.strip() for s in raw.split(",") if s.strip()]
            if len(args) == 2 and args[1] is Ellipsis:
                return tuple(_coerce(s, args[0], where) for s in items)
            if len(items) != len(args):
                raise ConfigError(f"{where} expects {len(args)} comma-separated values, got {raw!r}")
            return tuple(_coerce(s, t, where) for s, t in zip(items, args))
        if hint is bool:
            word = raw.strip().lower()
            if word in TRUE_WORDS:
                return True
            if word in FALSE_WORDS:
                return False
            raise ValueError(raw)
        if isinstance(hint, type) and issubclass(hint, Enum):
            return hint(raw.strip())
        if hint in (int, float):
            return hint(raw.strip())
        return raw.strip()
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"{where}: cannot read {raw!r} as {getattr(hint, '__name__', hint)}") from None


def _section_kwargs(parser: ConfigParser, name: str, cls) -> dict:
    if not parser.has_section(name):
        return {}
    hints = typing.get_type_hints(cls)
    known = {f.name for f in fields(cls)} - ({"weights"} if name == "train" else set())
    kwargs = {}
    for key, raw in parser.items(name):
        if key not in known:
            raise ConfigError(f"unknown key [{name}] {key}")
        kwargs[key] = _coerce(raw, hints[key], f"[{name}] {key}")
    return kwargs


def _build(cls, kwargs: dict, name: str):
    try:
        return cls(**kwargs)
    except ValueError as e:
        raise ConfigError(f"[{name}] {e}") from e


def parse_run_config(text: str, source: str = "<string>") -> RunConfig:
    parser = ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except Exception as e:
        raise ConfigError(f"{source}: {e}") from e
    for name in parser.sections():
        if name not in SECTIONS and name != "output":
            raise ConfigError(f"unknown section [{name}]")
    if parser.has_section("output"):
        extra = set(parser.options("output")) - {"dir"}
        if extra:
            raise ConfigError(f"unknown key [output] {sorted(extra)[0]}")

    weights = _build(LossWeights, _section_kwargs(parser, "weights", LossWeights), "weights")
    train = _build(TrainConfig, {**_section_kwargs(parser, "train", TrainConfig), "weights": weights}, "train")
    return RunConfig(
        train=train,
        encoder=_build(EncoderConfig, _section_kwargs(parser, "encoder", EncoderConfig), "encoder"),
        predictor=_build(PredictorConfig, _section_kwargs(parser, "predictor", PredictorConfig), "predictor"),
        discriminator=_build(DiscriminatorConfig,
                             _section_kwargs(parser, "discriminator", DiscriminatorConfig), "discriminator"),
        dataset=_build(DatasetConfig, _section_kwargs(parser, "dataset", DatasetConfig), "dataset"),
        augment=_build(AugmentationConfig, _section_kwargs(parser, "augment", AugmentationConfig), "augment"),
        ablation=_build(AblationConfig, _section_kwargs(parser, "ablation", AblationConfig), "ablation"),
        output_dir=parser.get("output", "dir", fallback="").strip(),
    )


def load_run_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config not found: {path}")
    return parse_run_config(path.read_text(encoding="utf-8"), str(path))
