# synth/motion.py
"""
Periodic workout kinematics.

One repetition is one period of the motion waveform

    s(theta) = (1 - cos theta) / 2 + a * (sin theta - sin(2 theta) / 2)

which starts and ends at rest (s = 0, ds/dtheta = 0), so steps chain without
jumps and every repetition-bearing step spans a whole number of periods.
Acceleration follows s along the activity's axis on top of gravity; angular
rate follows the normalized slope ds/dtheta on a constant bias.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from dataio.dataset_manager import RepetitionAnnotation
from dataio.sessions import ActivityLabel, Position


GRAVITY = 9.81
MAX_HARMONIC = 0.08
MIN_REPETITION_FREQ = 0.1
MAX_REPETITION_FREQ = 5.0
GYRO_BIAS_RATIO = 1.2

# noise std of rest steps per unit noise level
NULL_NOISE_FLOOR = {"acc": 0.5, "gyro": 0.2, "hbc": 2.0}

Vec3 = Tuple[float, float, float]


def _unit(x: float, y: float, z: float) -> Vec3:
    v = np.array([x, y, z], dtype=np.float64)
    v /= np.linalg.norm(v)
    return (float(v[0]), float(v[1]), float(v[2]))


def rotation_matrix(rotvec: Sequence[float]) -> np.ndarray:
    """Rodrigues rotation for a rotation vector (axis * angle, radians)."""
    r = np.asarray(rotvec, dtype=np.float64)
    angle = float(np.linalg.norm(r))
    if angle == 0.0:
        return np.eye(3)
    k = r / angle
    kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(angle) * kx + (1.0 - np.cos(angle)) * (kx @ kx)


# ----------------------------
# Waveform
# ----------------------------

def waveform(theta: np.ndarray, harmonic: float = 0.0) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    return (1.0 - np.cos(theta)) / 2.0 + harmonic * (np.sin(theta) - np.sin(2.0 * theta) / 2.0)


def waveform_slope(theta: np.ndarray, harmonic: float = 0.0) -> np.ndarray:
    """d waveform / d theta."""
    theta = np.asarray(theta, dtype=np.float64)
    return np.sin(theta) / 2.0 + harmonic * (np.cos(theta) - np.cos(2.0 * theta))


@lru_cache(maxsize=256)
def _slope_peak(harmonic: float) -> float:
    grid = np.linspace(0.0, 2.0 * np.pi, 4096, endpoint=False)
    return float(np.max(np.abs(waveform_slope(grid, harmonic))))


# ----------------------------
# Profiles
# ----------------------------

@dataclass(frozen=True)
class ActivityProfile:
    freq_hz: float
    acc_amp: float
    gyro_amp: float
    hbc_depth: float
    acc_axis: Vec3
    gyro_axis: Vec3
    sets: int = 1
    reps_per_set: Optional[int] = None
    duration_s: float = 0.0

    @property
    def is_strength(self) -> bool:
        return self.reps_per_set is not None


ACTIVITY_PROFILES: Dict[ActivityLabel, ActivityProfile] = {
    ActivityLabel.ADDUCTOR: ActivityProfile(
        0.35, 2.0, 0.8, 0.35, _unit(1.0, 0.2, 0.3), _unit(0.0, 0.0, 1.0), sets=3, reps_per_set=10
    ),
    ActivityLabel.ARMCURL: ActivityProfile(
        0.40, 3.0, 2.0, 0.50, _unit(0.2, 1.0, 0.4), _unit(1.0, 0.0, 0.2), sets=3, reps_per_set=10
    ),
    ActivityLabel.BENCHPRESS: ActivityProfile(
        0.33, 2.5, 0.6, 0.45, _unit(0.0, 0.3, 1.0), _unit(0.3, 1.0, 0.0), sets=3, reps_per_set=10
    ),
    ActivityLabel.LEGCURL: ActivityProfile(
        0.38, 1.8, 1.2, 0.30, _unit(0.6, 0.6, 0.2), _unit(0.0, 1.0, 0.3), sets=3, reps_per_set=10
    ),
    ActivityLabel.LEGPRESS: ActivityProfile(
        0.30, 2.2, 0.5, 0.40, _unit(0.1, 0.9, 0.6), _unit(1.0, 0.4, 0.0), sets=3, reps_per_set=10
    ),
    ActivityLabel.SQUAT: ActivityProfile(
        0.32, 3.5, 0.9, 0.55, _unit(0.4, 0.0, 1.0), _unit(0.2, 0.2, 1.0), sets=3, reps_per_set=10
    ),
    ActivityLabel.RIDING: ActivityProfile(
        1.2, 1.5, 1.5, 0.25, _unit(0.7, 0.1, 0.7), _unit(0.0, 1.0, 0.0), duration_s=60.0
    ),
    ActivityLabel.ROPESKIPPING: ActivityProfile(
        2.0, 8.0, 3.0, 0.30, _unit(0.0, 0.1, 1.0), _unit(1.0, 0.0, 0.0), duration_s=40.0
    ),
    ActivityLabel.RUNNING: ActivityProfile(
        1.4, 7.0, 3.5, 0.45, _unit(0.3, 0.2, 1.0), _unit(0.0, 0.3, 1.0), duration_s=60.0
    ),
    ActivityLabel.STAIRSCLIMBER: ActivityProfile(
        0.7, 3.0, 1.5, 0.40, _unit(0.5, 0.5, 0.7), _unit(1.0, 1.0, 0.0), duration_s=60.0
    ),
    ActivityLabel.WALKING: ActivityProfile(
        0.9, 4.0, 2.0, 0.35, _unit(0.2, 0.6, 0.8), _unit(0.0, 0.0, 1.0), duration_s=60.0
    ),
}


@dataclass(frozen=True)
class PositionProfile:
    acc_gain: float
    gyro_gain: float
    hbc_gain: float
    mount: Vec3  # rotation vector of the sensor mount
    rest_axis: Vec3


POSITION_PROFILES: Dict[Position, PositionProfile] = {
    Position.WRIST: PositionProfile(1.0, 1.0, 1.0, (0.0, 0.0, 0.0), _unit(0.0, 0.0, 1.0)),
    Position.LEG: PositionProfile(0.8, 0.7, 1.15, (np.pi / 2, 0.0, 0.0), _unit(0.0, 1.0, 0.2)),
    Position.POCKET: PositionProfile(0.6, 0.5, 0.85, (0.0, np.pi / 2, 0.0), _unit(1.0, 0.0, 0.3)),
}


@dataclass(frozen=True)
class SubjectSignature:
    """Per-subject motion style: amplitude gain, tempo, waveform asymmetry and sensor tilt."""

    subject_id: int
    gain: float = 1.0
    tempo: float = 1.0
    harmonic: float = 0.05
    tilt: Vec3 = (0.0, 0.0, 0.0)
    acc_offset: Vec3 = (0.0, 0.0, 0.0)
    hbc_gain: float = 1.0

    def __post_init__(self):
        if abs(self.harmonic) > MAX_HARMONIC:
            raise ValueError(f"harmonic must be within +-{MAX_HARMONIC}, got {self.harmonic}")
        if self.gain <= 0 or self.tempo <= 0 or self.hbc_gain <= 0:
            raise ValueError(f"gain, tempo and hbc_gain must be > 0: {self}")

    @classmethod
    def from_seed(cls, seed: int, subject_id: int) -> "SubjectSignature":
        rng = np.random.default_rng([int(seed), int(subject_id)])
        sign = 1.0 if rng.random() < 0.5 else -1.0
        return cls(
            subject_id=int(subject_id),
            gain=float(rng.uniform(0.8, 1.2)),
            tempo=float(rng.uniform(0.9, 1.1)),
            harmonic=float(sign * rng.uniform(0.02, MAX_HARMONIC)),
            tilt=tuple(float(v) for v in rng.normal(0.0, 0.25, 3)),
            acc_offset=tuple(float(v) for v in rng.uniform(-0.3, 0.3, 3)),
            hbc_gain=float(rng.uniform(0.8, 1.2)),
        )

    @property
    def rotation(self) -> np.ndarray:
        return rotation_matrix(self.tilt)


# ----------------------------
# Script
# ----------------------------

@dataclass(frozen=True)
class MotionStep:
    activity: ActivityLabel
    duration_s: float
    repetition_freq: float = 0.0
    amplitude: Dict[str, float] = field(default_factory=dict)
    noise_level: float = 0.0
    reps: Optional[int] = None
    acc_axis: Vec3 = (0.0, 0.0, 1.0)
    gyro_axis: Vec3 = (0.0, 0.0, 1.0)
    harmonic: float = 0.0

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ValueError(f"step duration must be > 0, got {self.duration_s}")
        if self.noise_level < 0:
            raise ValueError(f"noise_level must be >= 0, got {self.noise_level}")
        if abs(self.harmonic) > MAX_HARMONIC:
            raise ValueError(f"harmonic must be within +-{MAX_HARMONIC}, got {self.harmonic}")
        unknown = set(self.amplitude) - {"acc", "gyro", "hbc"}
        if unknown:
            raise ValueError(f"unknown amplitude channels: {sorted(unknown)}")
        if self.reps is not None and self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if self.is_moving and not MIN_REPETITION_FREQ < self.repetition_freq <= MAX_REPETITION_FREQ:
            raise ValueError(
                f"repetition_freq must be in ({MIN_REPETITION_FREQ}, {MAX_REPETITION_FREQ}] Hz, "
                f"got {self.repetition_freq}"
            )

    @classmethod
    def repetitions(cls, activity: ActivityLabel, reps: int, freq: float, **kwargs) -> "MotionStep":
        return cls(activity=activity, duration_s=reps / freq, repetition_freq=freq, reps=reps, **kwargs)

    @classmethod
    def rest(cls, duration_s: float, noise_level: float = 0.0) -> "MotionStep":
        return cls(activity=ActivityLabel.NULL, duration_s=duration_s, noise_level=noise_level)

    @property
    def is_moving(self) -> bool:
        return self.activity is not ActivityLabel.NULL and any(v > 0 for v in self.amplitude.values())

    def amp(self, channel: str) -> float:
        return float(self.amplitude.get(channel, 0.0))

    def n_samples(self, fs: float) -> int:
        if self.reps is not None:
            n = int(round(self.reps * fs / self.repetition_freq))
        else:
            n = int(round(self.duration_s * fs))
        return max(n, 1)

    def effective_freq(self, fs: float) -> float:
        """Frequency that fits a whole number of periods into the sampled step."""
        if self.reps is not None:
            return self.reps * fs / self.n_samples(fs)
        return self.repetition_freq


@dataclass(frozen=True)
class MotionScript:
    steps: Tuple[MotionStep, ...]
    rest_axis: Vec3 = (0.0, 0.0, 1.0)
    acc_offset: Vec3 = (0.0, 0.0, 0.0)
    gravity: float = GRAVITY

    def __post_init__(self):
        if not self.steps:
            raise ValueError("a motion script needs at least one step")
        object.__setattr__(self, "steps", tuple(self.steps))

    def step_lengths(self, fs: float) -> np.ndarray:
        return np.array([st.n_samples(fs) for st in self.steps], dtype=np.int64)

    def bounds(self, fs: float) -> List[Tuple[int, int]]:
        """[start, stop) sample range of every step."""
        stops = np.cumsum(self.step_lengths(fs))
        starts = stops - self.step_lengths(fs)
        return [(int(a), int(b)) for a, b in zip(starts, stops)]

    def n_samples(self, fs: float) -> int:
        return int(self.step_lengths(fs).sum())

    def step_index(self, fs: float, oversample: int = 1) -> np.ndarray:
        lengths = self.step_lengths(fs) * oversample
        return np.repeat(np.arange(len(self.steps)), lengths)

    def label_indices(self, fs: float) -> np.ndarray:
        labels = np.array([st.activity.index for st in self.steps], dtype=np.int64)
        return labels[self.step_index(fs)]

    def annotations(self, fs: float) -> List[RepetitionAnnotation]:
        return [
            RepetitionAnnotation(st.activity, start, stop, st.reps)
            for st, (start, stop) in zip(self.steps, self.bounds(fs))
            if st.reps is not None and st.is_moving
        ]

    def phase_traces(self, fs: float, oversample: int = 1) -> Tuple[np.ndarray, np.ndarray]:
        """
        Waveform s and normalized slope u (|u| <= 1) at fs * oversample.
        Rest steps are zero in both.
        """
        lengths = self.step_lengths(fs) * oversample
        step_of = np.repeat(np.arange(len(self.steps)), lengths)
        starts = np.cumsum(lengths) - lengths
        local = np.arange(int(lengths.sum())) - np.repeat(starts, lengths)

        freq = np.array([st.effective_freq(fs) if st.is_moving else 0.0 for st in self.steps])
        harm = np.array([st.harmonic for st in self.steps])
        peak = np.array([_slope_peak(st.harmonic) for st in self.steps])
        moving = np.array([st.is_moving for st in self.steps])

        theta = 2.0 * np.pi * freq[step_of] * local / (fs * oversample)
        a = harm[step_of]
        s = np.where(moving[step_of], waveform(theta, a), 0.0)
        u = np.where(moving[step_of], waveform_slope(theta, a) / peak[step_of], 0.0)
        return s, u

    def per_sample(self, fs: float, values: Sequence[float], oversample: int = 1) -> np.ndarray:
        return np.asarray(values, dtype=np.float64)[self.step_index(fs, oversample)]


def step_noise_sigma(script: MotionScript, clean: np.ndarray, fs: float, channel: str) -> np.ndarray:
    """
    Per-sample noise std: noise_level times the clean signal's std within a
    moving step, noise_level times the channel floor on rest steps.
    """
    clean = np.asarray(clean, dtype=np.float64)
    sigma = np.zeros_like(clean)
    for st, (a, b) in zip(script.steps, script.bounds(fs)):
        if st.noise_level == 0:
            continue
        if st.is_moving:
            sigma[a:b] = st.noise_level * np.std(clean[a:b], axis=0)
        else:
            sigma[a:b] = st.noise_level * NULL_NOISE_FLOOR[channel]
    return sigma


def simulate_imu(script: MotionScript, fs: float = 20.0, seed: int = 0) -> np.ndarray:
    """
    Accelerometer (m/s^2) and gyroscope (rad/s) channels, [n, 6].

    acc  = (g + A * s) * d + offset     d: activity axis (rest axis when idle)
    gyro = (1.2 R + R * u) * e          e: rotation axis
    """
    s, u = script.phase_traces(fs)
    idx = script.step_index(fs)

    acc_amp = np.array([st.amp("acc") if st.is_moving else 0.0 for st in script.steps])[idx]
    gyro_amp = np.array([st.amp("gyro") if st.is_moving else 0.0 for st in script.steps])[idx]
    rest = np.asarray(script.rest_axis, dtype=np.float64)
    acc_axes = np.array([st.acc_axis if st.is_moving else rest for st in script.steps])[idx]
    gyro_axes = np.array([st.gyro_axis for st in script.steps])[idx]

    acc = (script.gravity + acc_amp * s)[:, None] * acc_axes + np.asarray(script.acc_offset)
    gyro = (GYRO_BIAS_RATIO * gyro_amp + gyro_amp * u)[:, None] * gyro_axes
    clean = np.concatenate([acc, gyro], axis=1)

    sigma = np.concatenate(
        [step_noise_sigma(script, acc, fs, "acc"), step_noise_sigma(script, gyro, fs, "gyro")],
        axis=1,
    )
    if np.any(sigma > 0):
        rng = np.random.default_rng(seed)
        clean = clean + rng.standard_normal(clean.shape) * sigma
    return clean


def activity_step(
    activity: ActivityLabel,
    signature: SubjectSignature,
    position: Position,
    noise_level: float = 0.0,
    reps: Optional[int] = None,
    duration_s: Optional[float] = None,
    tempo: float = 1.0,
) -> MotionStep:
    """One set (strength) or one bout (aerobic) of `activity` in this subject's style."""
    profile = ACTIVITY_PROFILES[ActivityLabel(activity)]
    pos = POSITION_PROFILES[Position(position)]
    rot = signature.rotation @ rotation_matrix(pos.mount)
    freq = profile.freq_hz * signature.tempo * tempo

    if reps is None:
        if profile.is_strength:
            reps = profile.reps_per_set
        else:
            reps = max(1, int(round((duration_s or profile.duration_s) * freq)))

    return MotionStep.repetitions(
        ActivityLabel(activity),
        reps,
        freq,
        amplitude={
            "acc": profile.acc_amp * signature.gain * pos.acc_gain,
            "gyro": profile.gyro_amp * signature.gain * pos.gyro_gain,
            "hbc": profile.hbc_depth * signature.hbc_gain * pos.hbc_gain,
        },
        noise_level=noise_level,
        acc_axis=tuple(float(v) for v in rot @ np.asarray(profile.acc_axis)),
        gyro_axis=tuple(float(v) for v in rot @ np.asarray(profile.gyro_axis)),
        harmonic=signature.harmonic,
    )


def rest_axis_for(signature: SubjectSignature, position: Position) -> Vec3:
    pos = POSITION_PROFILES[Position(position)]
    rot = signature.rotation @ rotation_matrix(pos.mount)
    return tuple(float(v) for v in rot @ np.asarray(pos.rest_axis))
