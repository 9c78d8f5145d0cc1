"""
counting package

Repetition counting on exercise segments with grid-searched peak parameters.
"""

from .segments import STRENGTH_EXERCISES, ExerciseSegment, extract_segments
from .repetitions import (
    CountConfig,
    CountResult,
    CountSource,
    count_accuracy,
    count_segment,
    count_source,
    evaluate_counting,
    fuse_closest_two,
    fuse_imu,
    grid_search_peak_params,
)

__all__ = [
    "STRENGTH_EXERCISES",
    "ExerciseSegment",
    "extract_segments",
    "CountConfig",
    "CountResult",
    "CountSource",
    "count_accuracy",
    "count_segment",
    "count_source",
    "evaluate_counting",
    "fuse_closest_two",
    "fuse_imu",
    "grid_search_peak_params",
]
