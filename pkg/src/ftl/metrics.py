"""Evaluation metrics: precision-normalized confusion matrix and RMSE-%."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


def confusion_precision(preds, labels) -> np.ndarray:
    """2x2 confusion counts normalized per predicted-class column.

    Rows are true classes, columns predicted classes. A class that is never
    predicted yields a NaN (undefined) column rather than zeros.
    """
    p = np.asarray(preds, dtype=np.int64)
    y = np.asarray(labels, dtype=np.int64)
    if p.shape != y.shape:
        raise ValueError(f"preds {p.shape} and labels {y.shape} differ")
    counts = np.zeros((2, 2), dtype=np.float64)
    for true, pred in zip(y, p):
        counts[true, pred] += 1.0
    out = np.full((2, 2), np.nan)
    for col in range(2):
        total = counts[:, col].sum()
        if total > 0:
            out[:, col] = counts[:, col] / total
    return out


def accuracy(preds, labels) -> float:
    p = np.asarray(preds)
    y = np.asarray(labels)
    if p.size == 0:
        raise ValueError("empty prediction list")
    return float(np.mean(p == y))


def rmse_percent(preds, targets, range_width: float) -> float:
    """100 * RMSE / range_width; range is 200 for steering, 100 for throttle."""
    p = np.asarray(preds, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.size == 0:
        raise ValueError("empty prediction list")
    if p.shape != t.shape:
        raise ValueError(f"preds {p.shape} and targets {t.shape} differ")
    return 100.0 * float(np.sqrt(np.mean((p - t) ** 2))) / range_width


@dataclass
class EvalReport:
    model: str
    checkpoint: str = ""
    sample_count: int = 0
    accuracy: float | None = None
    confusion: list | None = None          # 2x2, None cells where undefined
    per_lap_rmse: list = field(default_factory=list)  # dicts per held-out lap

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)

    @staticmethod
    def confusion_to_jsonable(matrix: np.ndarray) -> list:
        return [[None if math.isnan(v) else float(v) for v in row]
                for row in matrix]


@dataclass
class BenchReport:
    model: str
    variant: str
    batch_size: int
    passes: int
    images_per_sec: float
    seconds_per_pass: float

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)
