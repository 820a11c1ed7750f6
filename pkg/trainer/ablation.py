"""Ablation protocol: terms of the total loss activated one by one.

Every cell is trained once per seed; a cell reports its best-seed accuracy
and the min-max range across seeds. Runs are independent and may be spread
over a thread pool; results are collected in submission order.
"""
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from itertools import product
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from data.augment import AugmentationConfig
from data.base import Dataset
from losses.base import LossWeights
from mi.densities import RescaleKind
from nn.networks import DiscriminatorConfig, EncoderConfig, PredictorConfig
from .config import TrainConfig, WEIGHT_SET
from .loop import Trainer

logger = logging.getLogger(__name__)

CELL_KEYS = ["step", "loss_variant", "rescale", "lambda_critic", "lambda_latent", "lambda_augment", "subset_size"]


@dataclass(frozen=True)
class AblationCell:
    step: str
    loss_variant: str
    rescale: RescaleKind
    weights: LossWeights

    def row(self) -> Dict:
        return {"step": self.step, "loss_variant": self.loss_variant,
                "rescale": RescaleKind(self.rescale).value, **self.weights.as_dict()}


def activation_sequence(lambda_critic: float, lambda_latent: float, lambda_augment: float,
                        final_rescale: RescaleKind = RescaleKind.SOFTMAX) -> List[AblationCell]:
    """baseline -> cat-twin -> +sigmoid -> bin-cross -> +critic -> +latent -> +augment."""
    zero = LossWeights()
    soft, sig = RescaleKind.SOFTMAX, RescaleKind.SIGMOID
    return [
        AblationCell("baseline", "cat-cross", soft, zero),
        AblationCell("cat-twin", "cat-twin", soft, zero),
        AblationCell("+sigmoid", "cat-twin", sig, zero),
        AblationCell("bin-cross", "bin-cross", final_rescale, zero),
        AblationCell("+critic", "bin-cross", final_rescale, LossWeights(lambda_critic)),
        AblationCell("+latent", "bin-cross", final_rescale, LossWeights(lambda_critic, lambda_latent)),
        AblationCell("+augment", "bin-cross", final_rescale,
                     LossWeights(lambda_critic, lambda_latent, lambda_augment)),
    ]


def sweep_cells(variants: Sequence[str], rescales: Sequence[str],
                weight_set: Sequence[float] = WEIGHT_SET) -> List[AblationCell]:
    """Every (lambda_C, lambda_L) pair from ``{0} + weight_set`` with lambda_A = 0."""
    values = (0.0,) + tuple(weight_set)
    return [AblationCell("sweep", variant, RescaleKind(kind), LossWeights(lc, ll))
            for variant, kind, lc, ll in product(variants, rescales, values, values)]


class AblationRunner:
    """Trains one (cell, subset size, seed) combination against fixed base configs."""

    def __init__(self, train_set: Dataset, test_set: Dataset, train_cfg: TrainConfig,
                 encoder_cfg: Optional[EncoderConfig] = None,
                 predictor_cfg: Optional[PredictorConfig] = None,
                 disc_cfg: Optional[DiscriminatorConfig] = None,
                 augment_cfg: Optional[AugmentationConfig] = None):
        self.train_set = train_set
        self.test_set = test_set
        self.train_cfg = train_cfg
        self.encoder_cfg = encoder_cfg
        self.predictor_cfg = predictor_cfg
        self.disc_cfg = disc_cfg
        self.augment_cfg = augment_cfg

    def __call__(self, cell: AblationCell, subset_size: int, seed: int) -> float:
        cfg = replace(self.train_cfg, loss_variant=cell.loss_variant, rescale=cell.rescale,
                      weights=cell.weights, subset_size=subset_size)
        trainer = Trainer(cfg, seed, self.encoder_cfg, self.predictor_cfg, self.disc_cfg, self.augment_cfg)
        return trainer.fit(self.train_set, self.test_set).final_accuracy


RunFn = Callable[[AblationCell, int, int], float]


def _run_one(run_fn: RunFn, cell: AblationCell, subset_size: int, seed: int) -> Dict:
    row = {**cell.row(), "subset_size": subset_size, "seed": seed}
    try:
        row["accuracy"] = float(run_fn(cell, subset_size, seed))
        row["error"] = None
    except Exception as e:
        logger.warning("cell %s subset %d seed %d failed: %s", cell.step, subset_size, seed, e)
        row["accuracy"] = np.nan
        row["error"] = str(e)
    return row


def run_ablation(run_fn: RunFn, cells: Sequence[AblationCell], subset_sizes: Sequence[int],
                 seeds: Sequence[int], threads: int = 1) -> pd.DataFrame:
    """One row per (cell, subset size, seed); failed runs keep their error message."""
    jobs = [(cell, size, seed) for cell in cells for size in subset_sizes for seed in seeds]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda job: _run_one(run_fn, *job), jobs))
    else:
        rows = [_run_one(run_fn, *job) for job in jobs]
    return pd.DataFrame(rows)


def run_weight_sweep(run_fn: RunFn, variants: Sequence[str], rescales: Sequence[str],
                     subset_sizes: Sequence[int], seeds: Sequence[int],
                     weight_set: Sequence[float] = WEIGHT_SET, threads: int = 1) -> pd.DataFrame:
    return run_ablation(run_fn, sweep_cells(variants, rescales, weight_set), subset_sizes, seeds, threads)


class CachedRun:
    """Memoises a run function on everything but a cell's step name; safe across threads."""

    def __init__(self, run_fn: RunFn):
        self.run_fn = run_fn
        self._results: Dict[Tuple, float] = {}
        self._lock = threading.Lock()

    @staticmethod
    def key(cell: AblationCell, subset_size: int, seed: int) -> Tuple:
        return cell.loss_variant, RescaleKind(cell.rescale).value, cell.weights, subset_size, seed

    def __call__(self, cell: AblationCell, subset_size: int, seed: int) -> float:
        key = self.key(cell, subset_size, seed)
        with self._lock:
            if key in self._results:
                return self._results[key]
        value = self.run_fn(cell, subset_size, seed)
        with self._lock:
            return self._results.setdefault(key, value)

    def __len__(self) -> int:
        return len(self._results)


@dataclass
class WeightTuning:
    weights: LossWeights
    runs: pd.DataFrame


def _tuning_score(runs: pd.DataFrame) -> float:
    # failed runs count as zero accuracy
    medians = runs.assign(accuracy=runs["accuracy"].fillna(0.0)).groupby("subset_size")["accuracy"].median()
    return float(medians.mean())


def tune_activation_weights(run_fn: RunFn, subset_sizes: Sequence[int], seeds: Sequence[int],
                            weight_set: Sequence[float] = WEIGHT_SET,
                            final_rescale: RescaleKind = RescaleKind.SOFTMAX,
                            threads: int = 1) -> WeightTuning:
    """Greedy grid search over the bin-cross cells: lambda_C, then lambda_L, then lambda_A.

    Each stage keeps the weights chosen before it and tries every value of
    ``weight_set``. The winner has the best mean over subset sizes of the
    median accuracy across seeds; ties go to the smaller weight. Stage cells
    carry the activation-sequence step names, so a ``CachedRun`` shares
    their runs with the final sequence.
    """
    values = sorted(set(weight_set))
    if not values:
        raise ValueError("weight_set must not be empty")
    chosen = LossWeights()
    frames = []
    for step, name in (("+critic", "lambda_critic"), ("+latent", "lambda_latent"), ("+augment", "lambda_augment")):
        cells = [AblationCell(step, "bin-cross", final_rescale, replace(chosen, **{name: v})) for v in values]
        runs = run_ablation(run_fn, cells, subset_sizes, seeds, threads)
        frames.append(runs)
        scores = [_tuning_score(runs[runs[name] == v]) for v in values]
        best = values[int(np.argmax(scores))]
        logger.info("tuned %s = %g (score %.4f)", name, best, max(scores))
        chosen = replace(chosen, **{name: best})
    return WeightTuning(chosen, pd.concat(frames, ignore_index=True))


def summarise_cells(runs: pd.DataFrame) -> pd.DataFrame:
    """Best-seed accuracy, min, max, range and median per cell and subset size."""
    rows = []
    for key, group in runs.groupby(CELL_KEYS, sort=False):
        acc = group["accuracy"].dropna()
        errors = [e for e in group["error"] if e]
        rows.append({
            **dict(zip(CELL_KEYS, key)),
            "best_accuracy": acc.max() if len(acc) else np.nan,
            "min_accuracy": acc.min() if len(acc) else np.nan,
            "max_accuracy": acc.max() if len(acc) else np.nan,
            "range": (acc.max() - acc.min()) if len(acc) else np.nan,
            "median_accuracy": acc.median() if len(acc) else np.nan,
            "n_seeds": len(acc),
            "n_failed": len(errors),
            "failed": len(acc) == 0,
            "error": errors[0] if errors else None,
        })
    return pd.DataFrame(rows)


def _median_at(cells: pd.DataFrame, step: str, subset_size: int) -> float:
    rows = cells[(cells["step"] == step) & (cells["subset_size"] == subset_size)]
    return float(rows["median_accuracy"].iloc[0]) if len(rows) else np.nan


def directional_checks(cells: pd.DataFrame) -> Dict[str, Optional[bool]]:
    """Directional claims of the ablation; ``None`` where the table cannot decide.

    - full_ge_baseline: median accuracy with every term on is at least the
      baseline's, for every subset size;
    - gap_shrinks: the small-vs-large subset gap with latent and augment terms
      is no larger than with the critic alone;
    - critic_stabilises: median over paired cells of the seed range with the
      critic on is no larger than with it off.
    """
    checks: Dict[str, Optional[bool]] = {}
    sizes = sorted(cells["subset_size"].unique())

    pairs = [(_median_at(cells, "+augment", s), _median_at(cells, "baseline", s)) for s in sizes]
    pairs = [(full, base) for full, base in pairs if not (np.isnan(full) or np.isnan(base))]
    checks["full_ge_baseline"] = all(full >= base for full, base in pairs) if pairs else None

    if len(sizes) >= 2:
        small, large = sizes[0], sizes[-1]
        gap_full = _median_at(cells, "+augment", large) - _median_at(cells, "+augment", small)
        gap_critic = _median_at(cells, "+critic", large) - _median_at(cells, "+critic", small)
        checks["gap_shrinks"] = None if np.isnan(gap_full) or np.isnan(gap_critic) else bool(gap_full <= gap_critic)
    else:
        checks["gap_shrinks"] = None

    keys = ["loss_variant", "rescale", "lambda_latent", "lambda_augment", "subset_size"]
    off = cells[cells["lambda_critic"] == 0].set_index(keys)["range"]
    on = cells[cells["lambda_critic"] > 0].groupby(keys)["range"].median()
    paired = pd.concat([on.rename("on"), off.groupby(level=keys).median().rename("off")], axis=1).dropna()
    checks["critic_stabilises"] = bool((paired["on"] - paired["off"]).median() <= 0) if len(paired) else None
    return checks
