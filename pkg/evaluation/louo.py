# evaluation/louo.py
"""
Leave-one-user-out cross-validation of the activity recognizer.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import torch

from dataio.sessions import ACTIVITY_LABELS, SIGNAL_COLUMNS
from dataio.settings import get_threads
from dataio.windows import Fold, FoldPlan, WindowSet, make_louo_folds
from evaluation.metrics import EvalReport, compute_metrics
from evaluation.training import TrainSpec, train_fold
from models.config import ModelConfig
from models.hybrid_model import build_model


class LeakageError(AssertionError):
    pass


def assert_no_leakage(windows: WindowSet, fold: Fold, train_idx: np.ndarray, test_idx: np.ndarray) -> None:
    """Every training window must come from a subject (and session) other than the held-out one."""
    train_subjects = set(np.unique(windows.subjects[train_idx]).tolist())
    if fold.test_subject in train_subjects:
        raise LeakageError(f"fold S{fold.test_subject}: test subject found in the training windows")
    if not train_subjects <= set(fold.train_subjects):
        raise LeakageError(f"fold S{fold.test_subject}: training windows from subjects outside the fold plan")
    if np.any(windows.subjects[test_idx] != fold.test_subject):
        raise LeakageError(f"fold S{fold.test_subject}: test set holds windows of other subjects")
    shared = set(windows.sessions[train_idx].tolist()) & set(windows.sessions[test_idx].tolist())
    if shared:
        raise LeakageError(f"fold S{fold.test_subject}: sessions on both sides: {sorted(shared)}")


def scan_leakage(windows: WindowSet, plan: FoldPlan) -> int:
    """Check every fold; returns the number of folds scanned."""
    for fold, tr, te in plan.split(windows):
        assert_no_leakage(windows, fold, tr, te)
    return len(plan)


def _source_view(windows: WindowSet, cfg: ModelConfig) -> WindowSet:
    if windows.n_channels == len(SIGNAL_COLUMNS):
        return windows.select_source(cfg.signal_source)
    if windows.n_channels != cfg.n_channels:
        raise ValueError(
            f"windows carry {windows.n_channels} channels, {cfg.signal_source.value} needs {cfg.n_channels}"
        )
    return windows


def run_fold(windows: WindowSet, fold: Fold, cfg: ModelConfig, spec: TrainSpec) -> Dict[str, Any]:
    """Train on the fold's training subjects and predict the held-out subject."""
    test_mask = windows.subjects == fold.test_subject
    train_idx = np.flatnonzero(np.isin(windows.subjects, list(fold.train_subjects)))
    test_idx = np.flatnonzero(test_mask)
    assert_no_leakage(windows, fold, train_idx, test_idx)

    torch.manual_seed(spec.seed)
    model = build_model(cfg)
    trained = train_fold(model, windows.subset(train_idx), spec, fold=f"S{fold.test_subject}")

    test = windows.subset(test_idx)
    pred = trained.predict(test.X)
    fold_report = compute_metrics(pred, test.labels, [a.value for a in ACTIVITY_LABELS])
    return {
        "fold": f"S{fold.test_subject}",
        "test_subject": fold.test_subject,
        "train_subjects": sorted(fold.train_subjects),
        "n_train": int(len(train_idx)),
        "n_test": int(len(test_idx)),
        "accuracy": fold_report.accuracy,
        "macro_f1": fold_report.macro_f1,
        "epochs_run": trained.epochs_run,
        "best_epoch": trained.best_epoch,
        "final_lr": trained.final_lr,
        "predictions": pred.astype(int).tolist(),
        "labels": test.labels.astype(int).tolist(),
    }


def _run_fold_worker(args) -> Dict[str, Any]:
    torch.set_num_threads(1)
    return run_fold(*args)


def pool_fold_records(records: List[Dict[str, Any]], class_names: List[str]) -> EvalReport:
    """Metrics over all test windows of all folds; fold records kept without raw predictions."""
    preds = np.concatenate([np.asarray(r["predictions"], dtype=np.int64) for r in records])
    labels = np.concatenate([np.asarray(r["labels"], dtype=np.int64) for r in records])
    report = compute_metrics(preds, labels, class_names)
    report.folds = [{k: v for k, v in r.items() if k not in ("predictions", "labels")} for r in records]
    return report


def run_louo(
    windows: WindowSet,
    cfg: ModelConfig,
    spec: TrainSpec,
    threads: Optional[int] = None,
    on_fold: Optional[Callable[[Dict[str, Any]], None]] = None,
) -> EvalReport:
    """
    One train_fold per subject; folds run in parallel worker processes when
    more than one thread is allowed. Results are reduced in ascending subject order.
    """
    view = _source_view(windows, cfg)
    plan = make_louo_folds(view)
    scan_leakage(view, plan)

    threads = threads or get_threads()
    jobs = [(view, fold, cfg, spec) for fold in plan]
    records: List[Dict[str, Any]] = []
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            for rec in pool.map(_run_fold_worker, jobs):
                records.append(rec)
                if on_fold:
                    on_fold(rec)
    else:
        for job in jobs:
            rec = run_fold(*job)
            records.append(rec)
            if on_fold:
                on_fold(rec)

    return pool_fold_records(records, [a.value for a in ACTIVITY_LABELS])
