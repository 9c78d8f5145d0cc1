# evaluation/training.py
"""
Mini-batch training with sample weighting, staircase-decayed Adam and early stopping.
"""

from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch
from sklearn.utils.class_weight import compute_class_weight
from torch import nn
from tqdm import tqdm

from dataio.sessions import N_ACTIVITY_CLASSES
from dataio.windows import WindowSet, compute_sample_weights, per_sample_weights
from models.hybrid_model import TrainedModel
from nnlib.layers import backward
from nnlib.losses import weighted_cross_entropy
from nnlib.optim import LrSchedule, adam_step, make_adam


VAL_STRATEGIES = ("auto", "subject", "window", "none")
MIN_SUBJECTS_FOR_SUBJECT_SPLIT = 5


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int, step: int, lr: float, loss: float):
        super().__init__(f"training diverged at epoch {epoch}, step {step} (lr={lr:.3g}, loss={loss})")
        self.epoch = epoch
        self.step = step
        self.lr = lr
        self.loss = loss


@dataclass(frozen=True)
class TrainSpec:
    max_epochs: int = 1000
    early_stop_patience: int = 100
    batch_size: int = 256
    schedule: LrSchedule = field(default_factory=LrSchedule)
    seed: int = 0
    val_fraction: float = 0.1
    val_strategy: str = "auto"
    use_sample_weights: bool = True
    dtype: str = "float32"
    progress: bool = True

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if not 0 < self.early_stop_patience < self.max_epochs:
            raise ValueError(
                f"early_stop_patience must be in (0, max_epochs), got {self.early_stop_patience} "
                f"with max_epochs={self.max_epochs}"
            )
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError(f"val_fraction must be in [0, 1), got {self.val_fraction}")
        if self.val_strategy not in VAL_STRATEGIES:
            raise ValueError(f"Unsupported val_strategy: {self.val_strategy!r}. Use one of {VAL_STRATEGIES}.")
        if self.dtype not in ("float32", "float64"):
            raise ValueError(f"dtype must be float32 or float64, got {self.dtype!r}")

    @property
    def torch_dtype(self) -> torch.dtype:
        return torch.float64 if self.dtype == "float64" else torch.float32

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schedule"] = self.schedule.to_dict()
        return d

    @classmethod
    def from_dict(cls, raw: dict) -> "TrainSpec":
        raw = dict(raw)
        if isinstance(raw.get("schedule"), dict):
            raw["schedule"] = LrSchedule(**raw["schedule"])
        return cls(**raw)


class EarlyStopping:
    """Tracks the best monitored loss; stop once `patience` epochs pass without a strict improvement."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best_loss = math.inf
        self.best_epoch = -1
        self.best_state: Optional[Dict[str, torch.Tensor]] = None

    def update(self, epoch: int, loss: float, model: nn.Module) -> bool:
        if loss < self.best_loss:
            self.best_loss = loss
            self.best_epoch = epoch
            self.best_state = copy.deepcopy(model.state_dict())
        return epoch - self.best_epoch >= self.patience

    def restore(self, model: nn.Module) -> None:
        if self.best_state is not None:
            model.load_state_dict(self.best_state)


# ----------------------------
# Helpers
# ----------------------------

def balanced_weight_lut(y: np.ndarray, n_classes: int) -> np.ndarray:
    """Per-class balanced weights indexed by class; classes absent from `y` get 1.0."""
    lut = np.ones(n_classes, dtype=np.float64)
    classes = np.unique(y)
    lut[classes] = compute_class_weight("balanced", classes=classes, y=y)
    return lut


def validation_split(
    n: int,
    groups: Optional[np.ndarray],
    spec: TrainSpec,
    strategy: Optional[str] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Indices (train, val). Subject-held-out when asked for (or, in auto mode,
    when there are at least 5 groups); otherwise a seeded window-level split.
    """
    strategy = strategy or spec.val_strategy
    idx = np.arange(n)
    if strategy == "none" or spec.val_fraction == 0.0 or n < 2:
        return idx, np.empty(0, dtype=np.int64)

    rng = np.random.default_rng(spec.seed)
    unique = np.unique(groups) if groups is not None else np.empty(0)
    if strategy == "auto":
        strategy = "subject" if len(unique) >= MIN_SUBJECTS_FOR_SUBJECT_SPLIT else "window"

    if strategy == "subject":
        if len(unique) < 2:
            raise ValueError("subject-held-out validation needs at least 2 training subjects")
        n_val = max(1, int(round(spec.val_fraction * len(unique))))
        val_groups = rng.choice(unique, size=min(n_val, len(unique) - 1), replace=False)
        val_mask = np.isin(groups, val_groups)
        return idx[~val_mask], idx[val_mask]

    n_val = max(1, int(round(spec.val_fraction * n)))
    perm = rng.permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def _weighted_loss(
    model: nn.Module, X: torch.Tensor, y: torch.Tensor, w: torch.Tensor, batch_size: int
) -> float:
    model.eval()
    total, mass = 0.0, 0.0
    with torch.no_grad():
        for i in range(0, len(X), batch_size):
            wb = w[i: i + batch_size]
            if float(wb.sum()) == 0.0:
                continue
            loss = weighted_cross_entropy(model(X[i: i + batch_size]), y[i: i + batch_size], wb)
            total += float(loss) * float(wb.sum())
            mass += float(wb.sum())
    return total / mass if mass > 0 else math.inf


# ----------------------------
# Training
# ----------------------------

def fit(
    model: nn.Module,
    X: np.ndarray,
    y: np.ndarray,
    spec: TrainSpec,
    groups: Optional[np.ndarray] = None,
    class_weights: Optional[np.ndarray] = None,
    fold: Optional[str] = None,
    val_strategy: Optional[str] = None,
) -> TrainedModel:
    """
    Train `model` on windows X [n, C, L] with integer labels y.

    `class_weights` is a per-class lookup; when omitted it is the balanced
    weighting of the training part (or all ones with use_sample_weights off).
    """
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0 or len(X) != len(y):
        raise ValueError(f"training set must be non-empty with one label per window ({len(X)} vs {len(y)})")
    if len(np.unique(y)) < 2:
        raise ValueError(f"training set needs at least 2 classes, got {np.unique(y).tolist()}")

    torch.manual_seed(spec.seed)
    gen = torch.Generator().manual_seed(spec.seed)
    dtype = spec.torch_dtype
    model.to(dtype)

    n_classes = model.cfg.n_classes
    tr_idx, val_idx = validation_split(len(X), groups, spec, val_strategy)
    if len(np.unique(y[tr_idx])) < 2:
        tr_idx, val_idx = np.arange(len(X)), np.empty(0, dtype=np.int64)

    if class_weights is None:
        class_weights = (
            balanced_weight_lut(y[tr_idx], n_classes)
            if spec.use_sample_weights
            else np.ones(n_classes, dtype=np.float64)
        )

    def to_tensors(idx: np.ndarray):
        xt = torch.as_tensor(np.asarray(X[idx]), dtype=dtype)
        if xt.dim() == 3:
            xt = xt.unsqueeze(1)
        return xt, torch.as_tensor(y[idx]), torch.as_tensor(class_weights[y[idx]], dtype=dtype)

    scaler = getattr(getattr(model, "backbone", None), "scaler", None)
    if scaler is not None:
        scaler.fit(np.asarray(X[tr_idx]))

    Xt, yt, wt = to_tensors(tr_idx)
    Xv, yv, wv = to_tensors(val_idx) if len(val_idx) else (None, None, None)

    optimizer = make_adam(model.parameters(), spec.schedule.initial)
    stopper = EarlyStopping(spec.early_stop_patience)
    history: List[Dict[str, float]] = []
    step = 0
    lr = spec.schedule.lr_at(0)
    epoch = 0

    bar = tqdm(range(spec.max_epochs), desc=f"fold {fold}" if fold else "train", disable=not spec.progress, leave=False)
    for epoch in bar:
        model.train()
        perm = torch.randperm(len(Xt), generator=gen)
        run_loss, run_mass = 0.0, 0.0
        for i in range(0, len(Xt), spec.batch_size):
            b = perm[i: i + spec.batch_size]
            wb = wt[b]
            if float(wb.sum()) == 0.0:
                continue
            lr = spec.schedule.lr_at(step)
            loss = weighted_cross_entropy(model(Xt[b]), yt[b], wb)
            if not torch.isfinite(loss):
                raise TrainingDivergedError(epoch, step, lr, float(loss))
            optimizer.zero_grad(set_to_none=True)
            backward(loss)
            adam_step(optimizer, lr)
            step += 1
            run_loss += float(loss) * float(wb.sum())
            run_mass += float(wb.sum())

        train_loss = run_loss / run_mass if run_mass else math.inf
        monitored = _weighted_loss(model, Xv, yv, wv, spec.batch_size) if Xv is not None else train_loss
        if not math.isfinite(monitored):
            raise TrainingDivergedError(epoch, step, lr, monitored)
        history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": monitored, "lr": lr})
        bar.set_postfix(loss=f"{train_loss:.4f}", val=f"{monitored:.4f}")

        if stopper.update(epoch, monitored, model):
            break

    stopper.restore(model)
    model.eval()
    return TrainedModel(
        config=model.cfg,
        model=model,
        fold=fold,
        epochs_run=epoch + 1,
        best_epoch=stopper.best_epoch,
        final_lr=lr,
        seed=spec.seed,
        history=history,
    )


def train_fold(
    model: nn.Module,
    train: WindowSet,
    spec: TrainSpec,
    fold: Optional[str] = None,
) -> TrainedModel:
    """
    Activity-recognition training on a WindowSet whose channels already match
    the model's signal source. Validation holds out training subjects when
    there are enough of them.
    """
    if len(train) == 0:
        raise ValueError("train_fold needs a non-empty training set")
    lut = np.ones(N_ACTIVITY_CLASSES, dtype=np.float64)
    if spec.use_sample_weights:
        tr_idx, _ = validation_split(len(train), train.subjects, spec)
        weights = compute_sample_weights(train.labels[tr_idx] if len(tr_idx) else train.labels)
        present = np.array([lbl.index for lbl in weights], dtype=np.int64)
        lut[present] = per_sample_weights(present, weights)
    return fit(model, train.X, train.labels, spec, groups=train.subjects, class_weights=lut, fold=fold)
