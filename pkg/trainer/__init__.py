from .config import TrainConfig, AblationConfig, DEFAULT_SEEDS, WEIGHT_SET, LOSS_VARIANTS
from .metrics import RunMetrics, MetricsWriter
from .model import TwinModel, build_networks, resolve_configs, full_state
from .evaluation import evaluate_accuracy, predict
from .loop import Trainer, NonFiniteLossError, RunStreams
from .ablation import (AblationCell, AblationRunner, CachedRun, WeightTuning, activation_sequence, sweep_cells,
                       run_ablation, run_weight_sweep, summarise_cells, directional_checks,
                       tune_activation_weights)
