# evaluation/authentication.py
"""
User authentication: identify the subject from windows of one workout, with
day-held-out rotation (train on the other days, test on one).
"""

from __future__ import annotations

from typing import Any, Dict, List, Optional

import numpy as np
import torch

from dataio.sessions import SIGNAL_COLUMNS, ActivityLabel
from dataio.windows import WindowSet
from evaluation.louo import pool_fold_records
from evaluation.metrics import EvalReport, compute_metrics
from evaluation.training import TrainSpec, fit
from models.auth_model import build_auth_model
from models.config import ModelConfig


def subject_class_names(subjects: List[int]) -> List[str]:
    return [f"S{s}" for s in subjects]


def run_auth(
    windows: WindowSet,
    cfg: ModelConfig,
    spec: TrainSpec,
    activity: ActivityLabel = ActivityLabel.RUNNING,
    on_fold=None,
) -> EvalReport:
    """
    Subject-id classification on `activity` windows. One fold per recording
    day; the report pools the held-out-day predictions of every fold.
    """
    activity = ActivityLabel(activity)
    sub = windows.where_label(activity)
    if len(sub) == 0:
        raise ValueError(f"activity {activity.value!r} has no windows in this dataset")
    if sub.n_channels == len(SIGNAL_COLUMNS):
        sub = sub.select_source(cfg.signal_source)

    subjects = sorted(np.unique(sub.subjects).tolist())
    if len(subjects) < 2:
        raise ValueError(f"authentication needs at least 2 subjects with {activity.value} windows, got {subjects}")
    days = sorted(np.unique(sub.days).tolist())
    if len(days) < 2:
        raise ValueError(f"day-held-out authentication needs at least 2 recording days, got {days}")

    class_of = {s: i for i, s in enumerate(subjects)}
    y_all = np.array([class_of[int(s)] for s in sub.subjects], dtype=np.int64)
    auth_cfg = cfg.with_(n_classes=len(subjects))
    names = subject_class_names(subjects)

    records: List[Dict[str, Any]] = []
    for day in days:
        test_mask = sub.days == day
        tr, te = np.flatnonzero(~test_mask), np.flatnonzero(test_mask)
        if len(np.unique(y_all[tr])) < 2:
            continue

        torch.manual_seed(spec.seed)
        model = build_auth_model(auth_cfg)
        trained = fit(
            model,
            sub.X[tr],
            y_all[tr],
            spec,
            groups=None,
            fold=f"D{day}",
            val_strategy="window",
        )
        pred = trained.predict(sub.X[te])
        fold_report = compute_metrics(pred, y_all[te], names)
        rec = {
            "fold": f"D{day}",
            "test_day": day,
            "n_train": int(len(tr)),
            "n_test": int(len(te)),
            "accuracy": fold_report.accuracy,
            "macro_f1": fold_report.macro_f1,
            "epochs_run": trained.epochs_run,
            "best_epoch": trained.best_epoch,
            "final_lr": trained.final_lr,
            "predictions": pred.astype(int).tolist(),
            "labels": y_all[te].astype(int).tolist(),
        }
        records.append(rec)
        if on_fold:
            on_fold(rec)

    if not records:
        raise ValueError("no day fold had at least 2 subjects to train on")
    return pool_fold_records(records, names)
