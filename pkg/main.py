import sys
import json
import logging
import argparse
from pathlib import Path

import pandas as pd

from config import Config, ConfigError, RunConfig, load_run_config
from data import get_loader
from losses import LossWeights
from trainer import (AblationRunner, CachedRun, Trainer, activation_sequence, directional_checks,
                     run_ablation, run_weight_sweep, summarise_cells, tune_activation_weights)
from verification import SUITE_NAMES, run_suites, suite_passed

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def _load(config_path) -> RunConfig:
    return load_run_config(config_path) if config_path else RunConfig()


def _output_root(cfg: RunConfig, out: str, default: Path) -> Path:
    if out:
        return Path(out)
    if cfg.output_dir:
        return Path(cfg.output_dir)
    return default


def _threads(cfg: RunConfig, flag: int) -> int:
    if flag:
        return flag
    if Config.THREADS:
        return Config.THREADS
    return cfg.ablation.threads


def _load_data(cfg: RunConfig):
    print(f"📂 Dataset: {cfg.dataset.kind}")
    try:
        train_set, test_set = get_loader(cfg.dataset, Config.IDX_DIR).load()
    except (ValueError, OSError) as e:
        raise ConfigError(f"cannot load dataset: {e}") from e
    print(f"📂 {len(train_set)} train / {len(test_set)} test samples, {train_set.n_classes} classes")
    return train_set, test_set


def cmd_train(args) -> int:
    """One seeded run: metrics.jsonl, summary.json, model.ckpt and config.ini."""
    cfg = _load(args.config)
    seed = args.seed if args.seed is not None else cfg.train.seeds[0]
    run_dir = Config.get_run_dir(f"seed-{seed}", _output_root(cfg, args.out, Config.RUNS_DIR))

    print(f"🚀 Training {cfg.train.loss_variant}/{cfg.train.rescale.value} with seed {seed}")
    print(f"📂 Output: {run_dir}")
    train_set, test_set = _load_data(cfg)

    (run_dir / "config.ini").write_text(cfg.to_ini(), encoding="utf-8")
    trainer = Trainer(cfg.train, seed, cfg.encoder, cfg.predictor, cfg.discriminator, cfg.augment)
    metrics = trainer.fit(train_set, test_set, run_dir)

    print(f"✅ Final test accuracy {metrics.final_accuracy:.4f} after {len(metrics.steps)} steps")
    return EXIT_OK


def cmd_ablate(args) -> int:
    """Activation sequence (or the full weight sweep) over subset sizes and seeds."""
    cfg = _load(args.config)
    seeds = (args.seed,) if args.seed is not None else cfg.train.seeds
    threads = _threads(cfg, args.threads)
    name = "sweep" if args.sweep else "sequence"
    out_dir = Config.get_ablation_dir(name, _output_root(cfg, args.out, Config.ABLATION_DIR))

    print(f"🚀 Ablation ({name}) over seeds {list(seeds)} on {threads} thread(s)")
    print(f"📂 Output: {out_dir}")
    train_set, test_set = _load_data(cfg)

    runner = AblationRunner(train_set, test_set, cfg.train, cfg.encoder, cfg.predictor,
                            cfg.discriminator, cfg.augment)
    ab = cfg.ablation
    if args.sweep:
        runs = run_weight_sweep(runner, ab.sweep_variants, ab.sweep_rescales, ab.subset_sizes,
                                seeds, ab.weight_set, threads)
    else:
        cached = CachedRun(runner)
        weights = LossWeights(ab.lambda_critic, ab.lambda_latent, ab.lambda_augment)
        if ab.tune_weights:
            print(f"🚀 Tuning weights over {list(ab.weight_set)}")
            tuning = tune_activation_weights(cached, ab.subset_sizes, seeds, ab.weight_set, ab.final_rescale, threads)
            tuning.runs.to_csv(out_dir / "tuning.csv", index=False)
            with open(out_dir / "tuned_weights.json", "w", encoding="utf-8") as f:
                json.dump(tuning.weights.as_dict(), f, indent=2, ensure_ascii=False)
            weights = tuning.weights
            print(f"✅ Tuned weights: {weights.as_dict()}")
        cells = activation_sequence(weights.lambda_critic, weights.lambda_latent, weights.lambda_augment,
                                    ab.final_rescale)
        runs = run_ablation(cached, cells, ab.subset_sizes, seeds, threads)

    summary = summarise_cells(runs)
    runs.to_csv(out_dir / "runs.csv", index=False)
    summary.to_csv(out_dir / "cells.csv", index=False)
    (out_dir / "config.ini").write_text(cfg.to_ini(), encoding="utf-8")
    if not args.sweep:
        checks = directional_checks(summary)
        with open(out_dir / "checks.json", "w", encoding="utf-8") as f:
            json.dump(checks, f, indent=2, ensure_ascii=False)
        for key, value in checks.items():
            print(f"   {key}: {value}")

    failed = int(summary["failed"].sum())
    print(summary[["step", "loss_variant", "rescale", "subset_size", "best_accuracy", "range"]].to_string(index=False))
    if failed == len(summary):
        print(f"❌ Every cell failed; see {out_dir / 'runs.csv'}")
        return EXIT_FAILED
    print(f"✅ {len(summary) - failed}/{len(summary)} cells completed")
    return EXIT_OK


def cmd_verify(args) -> int:
    names = list(SUITE_NAMES) if args.suite == "all" else [args.suite]
    seed = args.seed if args.seed is not None else 0
    out_dir = Path(args.out) if args.out else Config.VERIFY_DIR
    out_dir.mkdir(parents=True, exist_ok=True)

    print(f"🚀 Verifying: {', '.join(names)}")
    results = run_suites(names, seed)
    report = pd.DataFrame([r.as_dict() for r in results])
    report.to_csv(out_dir / f"{args.suite}.csv", index=False)
    print(report[["suite", "name", "passed", "value", "threshold", "margin", "required"]].to_string(index=False))
    print(f"📂 Report: {out_dir / (args.suite + '.csv')}")

    if suite_passed(results):
        print(f"✅ {len(results)} properties checked, all required properties hold")
        return EXIT_OK
    failing = [r.name for r in results if r.required and not r.passed]
    print(f"❌ {len(failing)} required properties failed: {', '.join(failing)}")
    return EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Semi-supervised fine-tuning with mutual-information losses")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=str, default=None, help="INI run configuration")
        p.add_argument("--seed", type=int, default=None, help="Override the configured seeds")
        p.add_argument("--out", type=str, default="", help="Output directory")
        p.add_argument("--threads", type=int, default=0, help="Worker threads (fallback: MITURBO_THREADS)")

    common(sub.add_parser("train", help="One seeded training run"))
    ablate = sub.add_parser("ablate", help="Ablation over loss terms, subset sizes and seeds")
    common(ablate)
    ablate.add_argument("--sweep", action="store_true", help="Every weight combination instead of the sequence")
    verify = sub.add_parser("verify", help="Property suites against exact references")
    common(verify)
    verify.add_argument("suite", nargs="?", default="all", choices=list(SUITE_NAMES) + ["all"])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, Config.LOG_LEVEL, logging.INFO),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    commands = {"train": cmd_train, "ablate": cmd_ablate, "verify": cmd_verify}
    try:
        return commands[args.command](args)
    except ConfigError as e:
        print(f"❌ {e}")
        return EXIT_USAGE
    except (FloatingPointError, ValueError) as e:
        print(f"❌ Run aborted: {e}")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
