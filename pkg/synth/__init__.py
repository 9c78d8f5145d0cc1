"""
synth package

Synthetic gym sessions: motion scripts, the body-potential front end and the dataset writer.
"""

from .motion import (
    ACTIVITY_PROFILES,
    MotionScript,
    MotionStep,
    SubjectSignature,
    activity_step,
    simulate_imu,
    waveform,
)
from .frontend import FrontEndModel, simulate_hbc
from .generator import build_session, generate_dataset, read_manifest

__all__ = [
    "ACTIVITY_PROFILES",
    "MotionScript",
    "MotionStep",
    "SubjectSignature",
    "activity_step",
    "simulate_imu",
    "waveform",
    "FrontEndModel",
    "simulate_hbc",
    "build_session",
    "generate_dataset",
    "read_manifest",
]
