"""
evaluation package

Training loop, leave-one-user-out and day-held-out drivers, metrics and report files.
"""

from .metrics import EvalReport, compute_metrics
from .training import EarlyStopping, TrainingDivergedError, TrainSpec, fit, train_fold
from .louo import LeakageError, run_louo, scan_leakage
from .authentication import run_auth

__all__ = [
    "EvalReport",
    "compute_metrics",
    "EarlyStopping",
    "TrainingDivergedError",
    "TrainSpec",
    "fit",
    "train_fold",
    "LeakageError",
    "run_louo",
    "scan_leakage",
    "run_auth",
]
