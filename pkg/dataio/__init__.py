"""
dataio package

Session format, parsing, windowing, fold plans and dataset access.
"""

from .sessions import (
    ACTIVITY_LABELS,
    N_ACTIVITY_CLASSES,
    WORKOUTS,
    ActivityLabel,
    DataQualityWarning,
    Position,
    SessionIntegrityError,
    SessionParseError,
    SessionRecording,
    SessionSchema,
    SessionSchemaError,
    WearingConfig,
    parse_session,
    serialize_session,
)
from .windows import (
    FoldPlan,
    SignalSource,
    WindowInstance,
    WindowSet,
    compute_sample_weights,
    make_louo_folds,
    window_session,
)
from .dataset_manager import DatasetManager, RepetitionAnnotation, load_manifest

__all__ = [
    "ACTIVITY_LABELS",
    "N_ACTIVITY_CLASSES",
    "WORKOUTS",
    "ActivityLabel",
    "DataQualityWarning",
    "Position",
    "SessionIntegrityError",
    "SessionParseError",
    "SessionRecording",
    "SessionSchema",
    "SessionSchemaError",
    "WearingConfig",
    "parse_session",
    "serialize_session",
    "FoldPlan",
    "SignalSource",
    "WindowInstance",
    "WindowSet",
    "compute_sample_weights",
    "make_louo_folds",
    "window_session",
    "DatasetManager",
    "RepetitionAnnotation",
    "load_manifest",
]
