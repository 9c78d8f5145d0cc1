# counting/repetitions.py
"""
Repetition counting: magnitude -> Fourier smoothing -> peak detection.

Counting accuracy is 1 - |detected - real| / real. Peak parameters are
grid-searched per source, either over all segments (upper bound) or over the
training subjects of each leave-one-user-out fold.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from counting.segments import ExerciseSegment
from dataio.sessions import ACC_CHANNELS, GYRO_CHANNELS, ActivityLabel
from dataio.settings import get_threads
from signals.peaks import PeakParams, detect_peaks
from signals.spectral import Series, fourier_lowpass, magnitude


class CountSource(str, Enum):
    ACC = "acc"
    GYRO = "gyro"
    HBC = "hbc"


# Reporting order of the five counting columns
FUSED_SOURCES = ("imu", "combined")
REPORT_SOURCES = ("acc", "gyro", "hbc", "imu", "combined")

FAST_ACTIVITIES = frozenset(
    {ActivityLabel.RUNNING, ActivityLabel.WALKING, ActivityLabel.ROPESKIPPING, ActivityLabel.RIDING}
)

GRID_MODES = ("upper-bound", "louo")


def _default_thresholds() -> Tuple[float, ...]:
    return tuple(round(0.1 * k, 1) for k in range(1, 10))


def _default_min_distance_s() -> Tuple[float, ...]:
    return tuple(0.25 * k for k in range(1, 13))


@dataclass(frozen=True)
class CountConfig:
    cutoff_default: float = 2.5
    cutoff_fast: float = 5.0
    thresholds: Tuple[float, ...] = field(default_factory=_default_thresholds)
    min_distance_s: Tuple[float, ...] = field(default_factory=_default_min_distance_s)
    sampling_rate: float = 20.0
    per_activity: bool = False

    @property
    def fast_set(self) -> frozenset:
        return FAST_ACTIVITIES

    def cutoff_for(self, activity: ActivityLabel) -> float:
        return self.cutoff_fast if activity in FAST_ACTIVITIES else self.cutoff_default

    def min_distances(self) -> List[int]:
        return [max(1, int(round(s * self.sampling_rate))) for s in self.min_distance_s]

    def grid(self) -> List[PeakParams]:
        """Scan order: threshold ascending, then min_distance ascending."""
        if not self.thresholds or not self.min_distance_s:
            raise ValueError("peak grid is empty")
        return [
            PeakParams(threshold=t, min_distance=d)
            for t in sorted(self.thresholds)
            for d in sorted(self.min_distances())
        ]


# ----------------------------
# Per-source counting
# ----------------------------

def source_series(seg: ExerciseSegment, source: CountSource) -> Series:
    source = CountSource(source)
    fs = seg.sampling_rate
    if source is CountSource.HBC:
        return Series(seg.signals[:, 0], fs)
    cols = ACC_CHANNELS if source is CountSource.ACC else GYRO_CHANNELS
    axes = seg.signals[:, cols]
    return magnitude(Series(axes[:, 0], fs), Series(axes[:, 1], fs), Series(axes[:, 2], fs))


def smoothed_source(seg: ExerciseSegment, source: CountSource, cfg: CountConfig) -> Series:
    if seg.n_frames < 3:
        raise ValueError(f"segment {seg.session}@{seg.start} too short to count ({seg.n_frames} frames)")
    return fourier_lowpass(source_series(seg, source), cfg.cutoff_for(seg.activity))


def count_source(seg: ExerciseSegment, source: CountSource, cfg: CountConfig, p: PeakParams) -> int:
    return len(detect_peaks(smoothed_source(seg, source, cfg), p))


def count_accuracy(detected: float, real_count: int) -> float:
    if real_count < 1:
        raise ValueError(f"real_count must be >= 1, got {real_count}")
    return 1.0 - abs(detected - real_count) / real_count


def fuse_imu(acc_count: int, gyro_count: int) -> float:
    return (acc_count + gyro_count) / 2.0


def fuse_closest_two(acc: int, gyro: int, hbc: int) -> float:
    """
    Mean of the closest pair of counts. Ties: pairs containing hbc first,
    then the lowest mean, then the acc-gyro pair.
    """
    pairs = [
        (abs(acc - gyro), False, (acc + gyro) / 2.0),
        (abs(acc - hbc), True, (acc + hbc) / 2.0),
        (abs(gyro - hbc), True, (gyro + hbc) / 2.0),
    ]
    best_diff = min(p[0] for p in pairs)
    tied = [p for p in pairs if p[0] == best_diff]
    with_hbc = [p for p in tied if p[1]]
    if with_hbc:
        tied = with_hbc
    return min(p[2] for p in tied)


# ----------------------------
# Grid search
# ----------------------------

@dataclass(frozen=True)
class GridSearchResult:
    params: PeakParams
    mean_accuracy: float


def _mean_accuracy(smoothed: Sequence[Series], truths: Sequence[int], p: PeakParams) -> float:
    return float(np.mean([count_accuracy(len(detect_peaks(s, p)), t) for s, t in zip(smoothed, truths)]))


def grid_search(
    segments: Sequence[ExerciseSegment],
    source: CountSource,
    cfg: CountConfig,
    threads: Optional[int] = None,
) -> GridSearchResult:
    if not segments:
        raise ValueError("grid search needs at least one segment")
    smoothed = [smoothed_source(seg, source, cfg) for seg in segments]
    truths = [seg.true_count for seg in segments]
    grid = cfg.grid()

    threads = threads or get_threads()
    if threads > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            scores = list(pool.map(lambda p: _mean_accuracy(smoothed, truths, p), grid))
    else:
        scores = [_mean_accuracy(smoothed, truths, p) for p in grid]

    # first maximum in scan order
    best = int(np.argmax(scores))
    return GridSearchResult(params=grid[best], mean_accuracy=scores[best])


def grid_search_peak_params(
    segments: Sequence[ExerciseSegment],
    source: CountSource,
    cfg: CountConfig,
    threads: Optional[int] = None,
) -> PeakParams:
    return grid_search(segments, source, cfg, threads).params


# ----------------------------
# Segment results
# ----------------------------

@dataclass(frozen=True)
class CountResult:
    activity: ActivityLabel
    session: str
    subject_id: int
    position: str
    start: int
    true_count: int
    acc: int
    gyro: int
    hbc: int

    @property
    def imu(self) -> float:
        return fuse_imu(self.acc, self.gyro)

    @property
    def combined(self) -> float:
        return fuse_closest_two(self.acc, self.gyro, self.hbc)

    def detected(self, source: str) -> float:
        return float(getattr(self, source))

    @property
    def accuracies(self) -> Dict[str, float]:
        return {s: count_accuracy(self.detected(s), self.true_count) for s in REPORT_SOURCES}

    def to_rows(self) -> List[dict]:
        """Long format: one row per source (acc, gyro, hbc, imu, combined)."""
        acc = self.accuracies
        return [
            {
                "session": self.session,
                "subject_id": self.subject_id,
                "position": self.position,
                "activity": self.activity.value,
                "start": self.start,
                "source": s,
                "detected": self.detected(s),
                "true_count": self.true_count,
                "accuracy": acc[s],
            }
            for s in REPORT_SOURCES
        ]


def count_segment(
    seg: ExerciseSegment,
    cfg: CountConfig,
    params_by_source: Mapping[CountSource, PeakParams],
) -> CountResult:
    counts = {src: count_source(seg, src, cfg, params_by_source[src]) for src in CountSource}
    return CountResult(
        activity=seg.activity,
        session=seg.session,
        subject_id=seg.subject_id,
        position=seg.position.value,
        start=seg.start,
        true_count=seg.true_count,
        acc=counts[CountSource.ACC],
        gyro=counts[CountSource.GYRO],
        hbc=counts[CountSource.HBC],
    )


# ----------------------------
# Dataset-level evaluation
# ----------------------------

@dataclass
class CountingEvaluation:
    mode: str
    results: List[CountResult]
    # fold ("all" or "S<id>") -> group key -> source -> chosen params
    params: Dict[str, Dict[str, dict]]

    def rows(self) -> pd.DataFrame:
        return pd.DataFrame([r for res in self.results for r in res.to_rows()])

    def summary(self) -> pd.DataFrame:
        return summarize_counting(self.rows())


def _group_key(seg: ExerciseSegment, cfg: CountConfig) -> str:
    return f"{seg.position.value}/{seg.activity.value}" if cfg.per_activity else seg.position.value


def _fit_params(
    segments: Sequence[ExerciseSegment], cfg: CountConfig, threads: Optional[int]
) -> Dict[str, Dict[CountSource, GridSearchResult]]:
    groups: Dict[str, List[ExerciseSegment]] = {}
    for seg in segments:
        groups.setdefault(_group_key(seg, cfg), []).append(seg)
    return {
        key: {src: grid_search(segs, src, cfg, threads) for src in CountSource}
        for key, segs in sorted(groups.items())
    }


def _params_to_json(fitted: Dict[str, Dict[CountSource, GridSearchResult]]) -> Dict[str, dict]:
    return {
        key: {
            src.value: {**res.params.to_dict(), "mean_accuracy": res.mean_accuracy}
            for src, res in by_src.items()
        }
        for key, by_src in fitted.items()
    }


def evaluate_counting(
    segments: Sequence[ExerciseSegment],
    cfg: CountConfig,
    mode: str = "upper-bound",
    threads: Optional[int] = None,
) -> CountingEvaluation:
    """
    Count every segment with grid-searched peak parameters.

    upper-bound: parameters searched over all segments.
    louo: for each subject, parameters searched over the other subjects'
    segments only; groups a held-out subject has no training counterpart for
    fall back to the pooled search over the remaining subjects.
    """
    if mode not in GRID_MODES:
        raise ValueError(f"Unsupported grid mode: {mode!r}. Use one of {GRID_MODES}.")
    if not segments:
        raise ValueError("evaluate_counting needs at least one segment")

    results: List[CountResult] = []
    params_log: Dict[str, Dict[str, dict]] = {}

    if mode == "upper-bound":
        fitted = _fit_params(segments, cfg, threads)
        params_log["all"] = _params_to_json(fitted)
        for seg in segments:
            chosen = fitted[_group_key(seg, cfg)]
            results.append(count_segment(seg, cfg, {s: r.params for s, r in chosen.items()}))
        return CountingEvaluation(mode, results, params_log)

    by_subject = segments_by_subject(segments)
    if len(by_subject) < 2:
        raise ValueError(f"louo grid mode needs at least 2 subjects, got {sorted(by_subject)}")

    for subject in sorted(by_subject):
        test = by_subject[subject]
        train = [s for other in sorted(by_subject) if other != subject for s in by_subject[other]]
        fitted = _fit_params(train, cfg, threads)
        params_log[f"S{subject}"] = _params_to_json(fitted)
        for seg in test:
            key = _group_key(seg, cfg)
            if key not in fitted:
                pooled = [s for s in train if s.position is seg.position] or list(train)
                fitted[key] = {src: grid_search(pooled, src, cfg, threads) for src in CountSource}
            results.append(count_segment(seg, cfg, {s: r.params for s, r in fitted[key].items()}))

    return CountingEvaluation(mode, results, params_log)


def summarize_counting(rows: pd.DataFrame) -> pd.DataFrame:
    """Per-activity and overall mean / std of accuracy for each source (population std)."""
    if rows.empty:
        return pd.DataFrame(columns=["position", "activity", "source", "n", "mean", "std"])
    per_activity = (
        rows.groupby(["position", "activity", "source"], sort=True)["accuracy"]
        .agg(n="count", mean="mean", std=lambda x: float(np.std(x)))
        .reset_index()
    )
    overall = (
        rows.groupby(["position", "source"], sort=True)["accuracy"]
        .agg(n="count", mean="mean", std=lambda x: float(np.std(x)))
        .reset_index()
    )
    overall.insert(1, "activity", "all")
    out = pd.concat([per_activity, overall], ignore_index=True)
    out["source"] = pd.Categorical(out["source"], categories=list(REPORT_SOURCES), ordered=True)
    out = out.sort_values(["position", "activity", "source"]).reset_index(drop=True)
    out["source"] = out["source"].astype(str)
    return out


def segments_by_subject(segments: Iterable[ExerciseSegment]) -> Dict[int, List[ExerciseSegment]]:
    out: Dict[int, List[ExerciseSegment]] = {}
    for seg in segments:
        out.setdefault(seg.subject_id, []).append(seg)
    return out
