"""Run metrics and their on-disk form.

Step and epoch records go to ``metrics.jsonl`` (one JSON object per line), the
final figures to ``summary.json``. Wall time is kept in memory and logged but
never written, so repeated runs produce byte-identical files.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional


@dataclass
class RunMetrics:
    seed: int
    steps: List[Dict[str, Any]] = field(default_factory=list)
    epoch_accuracy: List[float] = field(default_factory=list)
    degenerate_batches: int = 0
    skipped_anchors: int = 0
    wall_time: float = 0.0

    @property
    def final_accuracy(self) -> Optional[float]:
        return self.epoch_accuracy[-1] if self.epoch_accuracy else None

    def summary(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "steps": len(self.steps),
            "epoch_accuracy": self.epoch_accuracy,
            "final_accuracy": self.final_accuracy,
            "degenerate_batches": self.degenerate_batches,
            "skipped_anchors": self.skipped_anchors,
        }


class MetricsWriter:
    """Appends records to ``metrics.jsonl`` inside ``run_dir``."""

    def __init__(self, run_dir: Path):
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.metrics_path = self.run_dir / "metrics.jsonl"
        self.summary_path = self.run_dir / "summary.json"
        self.metrics_path.write_text("", encoding="utf-8")

    def write(self, record: Dict[str, Any]) -> None:
        with open(self.metrics_path, "a", encoding="utf-8") as f:
            f.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")

    def write_summary(self, metrics: RunMetrics, extra: Optional[Dict[str, Any]] = None) -> Path:
        data = metrics.summary()
        if extra:
            data.update(extra)
        with open(self.summary_path, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2, ensure_ascii=False)
        return self.summary_path
