"""Evaluation drivers: gate accuracy/confusion on a frame split, regressor
RMSE-% on held-out laps."""
from __future__ import annotations

import numpy as np

from .data import McnDataset, RnDataset
from .datalog import FrameRecord, denormalize_targets, split_frames
from .metrics import EvalReport, accuracy, confusion_precision, rmse_percent
from .models import LABEL_PRESENT


def predict_mcn(net, images_f64: np.ndarray, batch: int = 64) -> np.ndarray:
    """Predicted class per image (argmax; exact ties resolve to absent)."""
    preds = []
    for start in range(0, len(images_f64), batch):
        probs = net.predict(images_f64[start:start + batch])
        present = probs[:, LABEL_PRESENT] > probs[:, 1 - LABEL_PRESENT]
        preds.append(present.astype(np.int64))
    return np.concatenate(preds)


def eval_mcn(net, records: list[FrameRecord], test_fraction: float = 0.20,
             seed: int = 0, checkpoint: str = "") -> EvalReport:
    _, test = split_frames(records, test_fraction, seed)
    ds = McnDataset(test)
    preds = predict_mcn(net, ds.images_f64())
    conf = confusion_precision(preds, ds.labels)
    return EvalReport(
        model="mcn", checkpoint=checkpoint, sample_count=len(test),
        accuracy=accuracy(preds, ds.labels),
        confusion=EvalReport.confusion_to_jsonable(conf),
    )


def predict_rn(net, dataset: RnDataset, batch: int = 16) -> np.ndarray:
    """Bounded (steering_norm, throttle_norm) predictions per window."""
    outs = []
    for start in range(0, len(dataset), batch):
        xs = np.stack([dataset[i][0] for i in
                       range(start, min(start + batch, len(dataset)))])
        outs.append(net.predict(xs))
    return np.concatenate(outs)


def eval_rn(net, test_laps: list[list[FrameRecord]], lap_names=None,
            checkpoint: str = "") -> EvalReport:
    report = EvalReport(model="rn", checkpoint=checkpoint)
    names = lap_names or [f"lap{i}" for i in range(len(test_laps))]
    t = net.config.sequence_length
    for name, lap in zip(names, test_laps):
        ds = RnDataset([lap], t=t)
        preds_norm = predict_rn(net, ds)
        preds = np.array([denormalize_targets(p) for p in preds_norm])
        targets = np.array([[r.steering, r.throttle] for r in lap[t - 1:]])
        report.per_lap_rmse.append({
            "lap": name,
            "frames": len(lap),
            "steering_rmse_pct": rmse_percent(preds[:, 0], targets[:, 0], 200.0),
            "throttle_rmse_pct": rmse_percent(preds[:, 1], targets[:, 1], 100.0),
        })
        report.sample_count += len(ds)
    return report
