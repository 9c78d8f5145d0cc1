# dataio/windows.py
"""
Sliding-window instances, class-balancing sample weights and
leave-one-user-out fold plans.

Defaults follow the collection protocol: 20 Hz, 4 s windows (80 samples),
2 s overlap (stride 40).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.model_selection import LeaveOneGroupOut
from sklearn.utils.class_weight import compute_class_weight

from dataio.sessions import (
    ACTIVITY_LABELS,
    HBC_CHANNELS,
    IMU_CHANNELS,
    N_ACTIVITY_CLASSES,
    SIGNAL_COLUMNS,
    ActivityLabel,
    SessionRecording,
)


WINDOW_LEN = 80
WINDOW_STRIDE = 40

LabelRule = Callable[[np.ndarray], ActivityLabel]


class SignalSource(str, Enum):
    HBC = "hbc"
    IMU = "imu"
    COMBINED = "combined"

    @property
    def channels(self) -> slice:
        if self is SignalSource.HBC:
            return HBC_CHANNELS
        if self is SignalSource.IMU:
            return IMU_CHANNELS
        return slice(0, len(SIGNAL_COLUMNS))

    @property
    def n_channels(self) -> int:
        return len(range(*self.channels.indices(len(SIGNAL_COLUMNS))))


def majority_label(label_indices: np.ndarray) -> ActivityLabel:
    """Most frequent label of the window; any tie for the top count resolves to Null."""
    counts = np.bincount(np.asarray(label_indices, dtype=np.int64), minlength=N_ACTIVITY_CLASSES)
    top = counts.max()
    winners = np.flatnonzero(counts == top)
    if len(winners) > 1:
        return ActivityLabel.NULL
    return ACTIVITY_LABELS[int(winners[0])]


@dataclass(frozen=True, eq=False)
class WindowInstance:
    channels: np.ndarray  # [n_channels, window_len]
    label: ActivityLabel
    subject_id: int
    session: str
    start_index: int
    day: int = 0


def _window_starts(n_frames: int, window_len: int, stride: int) -> np.ndarray:
    if window_len < 1 or stride < 1:
        raise ValueError(f"window_len and stride must be >= 1, got {window_len}, {stride}")
    if n_frames < window_len:
        return np.empty(0, dtype=np.int64)
    return np.arange(0, n_frames - window_len + 1, stride, dtype=np.int64)


def window_session(
    rec: SessionRecording,
    window_len: int = WINDOW_LEN,
    stride: int = WINDOW_STRIDE,
    label_rule: LabelRule = majority_label,
) -> List[WindowInstance]:
    """
    Cut a session into windows starting at 0, stride, 2*stride, ... while
    start + window_len <= n_frames. A session shorter than one window yields [].
    """
    starts = _window_starts(rec.n_frames, window_len, stride)
    out: List[WindowInstance] = []
    for s in starts:
        sl = slice(int(s), int(s) + window_len)
        out.append(
            WindowInstance(
                channels=np.ascontiguousarray(rec.signals[sl].T),
                label=label_rule(rec.label_indices[sl]),
                subject_id=rec.subject_id,
                session=rec.session_id,
                start_index=int(s),
                day=rec.day,
            )
        )
    return out


# ----------------------------
# Array-backed window collection
# ----------------------------

@dataclass(frozen=True, eq=False)
class WindowSet:
    """Stacked windows: X is [n, n_channels, window_len] (float32); other fields are per-window."""

    X: np.ndarray
    labels: np.ndarray
    subjects: np.ndarray
    days: np.ndarray
    sessions: np.ndarray
    starts: np.ndarray
    channel_names: Tuple[str, ...] = SIGNAL_COLUMNS

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_channels(self) -> int:
        return self.X.shape[1]

    def subset(self, idx: Union[np.ndarray, Sequence[int]]) -> "WindowSet":
        idx = np.asarray(idx)
        return WindowSet(
            X=self.X[idx],
            labels=self.labels[idx],
            subjects=self.subjects[idx],
            days=self.days[idx],
            sessions=self.sessions[idx],
            starts=self.starts[idx],
            channel_names=self.channel_names,
        )

    def select_source(self, source: SignalSource) -> "WindowSet":
        if len(self.channel_names) != len(SIGNAL_COLUMNS):
            raise ValueError("select_source expects the full 7-channel window set")
        sl = SignalSource(source).channels
        return WindowSet(
            X=self.X[:, sl, :],
            labels=self.labels,
            subjects=self.subjects,
            days=self.days,
            sessions=self.sessions,
            starts=self.starts,
            channel_names=self.channel_names[sl],
        )

    def where_label(self, label: ActivityLabel) -> "WindowSet":
        return self.subset(np.flatnonzero(self.labels == label.index))

    def class_counts(self) -> Dict[ActivityLabel, int]:
        counts = np.bincount(self.labels, minlength=N_ACTIVITY_CLASSES)
        return {ACTIVITY_LABELS[i]: int(c) for i, c in enumerate(counts) if c > 0}

    @classmethod
    def concatenate(cls, parts: Sequence["WindowSet"]) -> "WindowSet":
        parts = [p for p in parts if len(p)]
        if not parts:
            raise ValueError("no windows to concatenate")
        return cls(
            X=np.concatenate([p.X for p in parts]),
            labels=np.concatenate([p.labels for p in parts]),
            subjects=np.concatenate([p.subjects for p in parts]),
            days=np.concatenate([p.days for p in parts]),
            sessions=np.concatenate([p.sessions for p in parts]),
            starts=np.concatenate([p.starts for p in parts]),
            channel_names=parts[0].channel_names,
        )


def window_set_from_session(
    rec: SessionRecording,
    window_len: int = WINDOW_LEN,
    stride: int = WINDOW_STRIDE,
    label_rule: LabelRule = majority_label,
) -> Optional[WindowSet]:
    """Vectorized equivalent of window_session; None when the session is shorter than a window."""
    starts = _window_starts(rec.n_frames, window_len, stride)
    if not len(starts):
        return None
    # sliding_window_view: [n_frames - L + 1, 7, L]
    views = sliding_window_view(rec.signals, window_len, axis=0)[starts]
    lab_views = sliding_window_view(rec.label_indices, window_len)[starts]
    labels = np.array([label_rule(lv).index for lv in lab_views], dtype=np.int64)
    n = len(starts)
    return WindowSet(
        X=views.astype(np.float32),
        labels=labels,
        subjects=np.full(n, rec.subject_id, dtype=np.int64),
        days=np.full(n, rec.day, dtype=np.int64),
        sessions=np.full(n, rec.session_id, dtype=object),
        starts=starts,
    )


# ----------------------------
# Sample weights
# ----------------------------

def _labels_of(instances: Union[WindowSet, Sequence[WindowInstance], np.ndarray]) -> np.ndarray:
    if isinstance(instances, WindowSet):
        return instances.labels
    if isinstance(instances, np.ndarray):
        return instances.astype(np.int64)
    return np.array([w.label.index for w in instances], dtype=np.int64)


def compute_sample_weights(
    instances: Union[WindowSet, Sequence[WindowInstance], np.ndarray],
) -> Dict[ActivityLabel, float]:
    """
    Balanced inverse-frequency class weights: weight(c) = N_total / (n_classes_present * N_c).
    Weighted class masses are equal, and sum_c N_c * weight(c) = N_total.
    """
    y = _labels_of(instances)
    if len(y) == 0:
        raise ValueError("compute_sample_weights needs at least one instance")
    classes = np.unique(y)
    weights = compute_class_weight("balanced", classes=classes, y=y)
    return {ACTIVITY_LABELS[int(c)]: float(w) for c, w in zip(classes, weights)}


def per_sample_weights(labels: np.ndarray, class_weights: Dict[ActivityLabel, float]) -> np.ndarray:
    lut = np.zeros(N_ACTIVITY_CLASSES, dtype=np.float64)
    for label, w in class_weights.items():
        lut[label.index] = w
    return lut[np.asarray(labels, dtype=np.int64)]


# ----------------------------
# Leave-one-user-out folds
# ----------------------------

@dataclass(frozen=True)
class Fold:
    train_subjects: frozenset
    test_subject: int


@dataclass(frozen=True)
class FoldPlan:
    folds: Tuple[Fold, ...]

    def __len__(self) -> int:
        return len(self.folds)

    def __iter__(self) -> Iterator[Fold]:
        return iter(self.folds)

    @property
    def subjects(self) -> List[int]:
        return sorted(f.test_subject for f in self.folds)

    def split(self, windows: WindowSet) -> Iterator[Tuple[Fold, np.ndarray, np.ndarray]]:
        """Yield (fold, train_idx, test_idx) over `windows`."""
        for fold in self.folds:
            test_mask = windows.subjects == fold.test_subject
            train_mask = np.isin(windows.subjects, list(fold.train_subjects))
            yield fold, np.flatnonzero(train_mask), np.flatnonzero(test_mask)


def _subjects_of(instances: Union[WindowSet, Sequence[WindowInstance], Iterable[int]]) -> np.ndarray:
    if isinstance(instances, WindowSet):
        return instances.subjects
    items = list(instances)
    if items and isinstance(items[0], WindowInstance):
        return np.array([w.subject_id for w in items], dtype=np.int64)
    return np.asarray(items, dtype=np.int64)


def make_louo_folds(instances: Union[WindowSet, Sequence[WindowInstance], Iterable[int]]) -> FoldPlan:
    """One fold per subject, ascending subject id; fold k tests subject k and trains on the rest."""
    subjects = _subjects_of(instances)
    unique = np.unique(subjects)
    if len(unique) < 2:
        raise ValueError(
            f"leave-one-user-out needs at least 2 distinct subjects, got {unique.tolist()}"
        )

    # LeaveOneGroupOut iterates groups in sorted order; one representative row per subject suffices
    logo = LeaveOneGroupOut()
    folds = []
    for train_idx, test_idx in logo.split(unique.reshape(-1, 1), groups=unique):
        folds.append(
            Fold(
                train_subjects=frozenset(int(s) for s in unique[train_idx]),
                test_subject=int(unique[test_idx][0]),
            )
        )
    return FoldPlan(folds=tuple(folds))
