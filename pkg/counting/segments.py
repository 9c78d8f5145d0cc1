# counting/segments.py
"""
Exercise segments cut from ground-truth labels (not from classifier output).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from dataio.dataset_manager import RepetitionAnnotation
from dataio.sessions import (
    ACTIVITY_LABELS,
    ActivityLabel,
    Position,
    SessionRecording,
    SessionSchemaError,
)


STRENGTH_EXERCISES = frozenset(
    {
        ActivityLabel.ADDUCTOR,
        ActivityLabel.ARMCURL,
        ActivityLabel.BENCHPRESS,
        ActivityLabel.LEGCURL,
        ActivityLabel.LEGPRESS,
        ActivityLabel.SQUAT,
    }
)
REPS_PER_SET = 10


@dataclass(frozen=True, eq=False)
class ExerciseSegment:
    activity: ActivityLabel
    signals: np.ndarray  # [n, 7], column order of SIGNAL_COLUMNS
    true_count: int
    session: str
    subject_id: int
    position: Position
    start: int = 0
    sampling_rate: float = 20.0

    def __post_init__(self):
        if self.activity is ActivityLabel.NULL:
            raise ValueError("an exercise segment cannot be Null")
        if self.true_count < 1:
            raise ValueError(f"true_count must be >= 1, got {self.true_count}")
        sig = np.asarray(self.signals, dtype=np.float64)
        if sig.ndim != 2 or sig.shape[1] != 7:
            raise ValueError(f"segment signals must be [n, 7], got {sig.shape}")
        object.__setattr__(self, "signals", sig)

    @property
    def n_frames(self) -> int:
        return len(self.signals)

    @property
    def stop(self) -> int:
        return self.start + self.n_frames


def label_runs(label_indices: np.ndarray) -> List[tuple]:
    """Contiguous runs as (label_index, start, stop)."""
    lab = np.asarray(label_indices)
    if lab.size == 0:
        return []
    edges = np.flatnonzero(np.diff(lab)) + 1
    starts = np.concatenate([[0], edges])
    stops = np.concatenate([edges, [lab.size]])
    return [(int(lab[s]), int(s), int(e)) for s, e in zip(starts, stops)]


def extract_segments(
    rec: SessionRecording,
    annotations: Optional[Sequence[RepetitionAnnotation]] = None,
    default_count: int = REPS_PER_SET,
    sampling_rate: float = 20.0,
) -> List[ExerciseSegment]:
    """
    Cut exercise segments out of a session.

    With annotations, each annotated [start, stop) run becomes one segment and
    must carry a single activity label. Without annotations, every contiguous
    strength-exercise run is a set of `default_count` repetitions; aerobic runs
    have no ground truth and are skipped.
    """
    segments = []
    if annotations is not None:
        for ann in annotations:
            if ann.start < 0 or ann.stop > rec.n_frames:
                raise SessionSchemaError(
                    f"{rec.session_id}: annotation [{ann.start}, {ann.stop}) outside session "
                    f"of {rec.n_frames} frames"
                )
            run = rec.label_indices[ann.start: ann.stop]
            if not np.all(run == ann.activity.index):
                raise SessionSchemaError(
                    f"{rec.session_id}: annotation [{ann.start}, {ann.stop}) is labeled "
                    f"{ann.activity.value} but covers other labels"
                )
            segments.append(
                ExerciseSegment(
                    activity=ann.activity,
                    signals=rec.signals[ann.start: ann.stop],
                    true_count=ann.count,
                    session=rec.session_id,
                    subject_id=rec.subject_id,
                    position=rec.position,
                    start=ann.start,
                    sampling_rate=sampling_rate,
                )
            )
        return segments

    for li, start, stop in label_runs(rec.label_indices):
        label = ACTIVITY_LABELS[li]
        if label not in STRENGTH_EXERCISES:
            continue
        segments.append(
            ExerciseSegment(
                activity=label,
                signals=rec.signals[start:stop],
                true_count=default_count,
                session=rec.session_id,
                subject_id=rec.subject_id,
                position=rec.position,
                start=start,
                sampling_rate=sampling_rate,
            )
        )
    return segments
