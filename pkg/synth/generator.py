# synth/generator.py
"""
Synthetic dataset writer.

Each (subject, day, position) session follows the collection protocol:
a rest period, then every selected workout (strength exercises as 3 sets of
10 repetitions, aerobic ones as one continuous bout) separated by rests,
padded with Null to at least ten minutes. Files land in the canonical
dataio format next to a `.counts.json` ground-truth sidecar, plus one
`manifest.json` describing the generation run.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from dataio.dataset_manager import MANIFEST_NAME, RepetitionAnnotation, write_counts
from dataio.sessions import (
    SAMPLING_RATE_HZ,
    WORKOUTS,
    ActivityLabel,
    Position,
    SessionRecording,
    WearingConfig,
    serialize_session,
    session_stem,
)
from dataio.settings import get_threads
from synth.frontend import FrontEndModel, simulate_hbc
from synth.motion import (
    ACTIVITY_PROFILES,
    MotionScript,
    MotionStep,
    SubjectSignature,
    activity_step,
    rest_axis_for,
    simulate_imu,
)


LEAD_REST_S = 10.0
SET_REST_S = 15.0
ACTIVITY_REST_S = 25.0
MIN_SESSION_S = 601.0
SIGNAL_DECIMALS = 6


def session_script(
    signature: SubjectSignature,
    position: Position,
    activities: Sequence[ActivityLabel],
    rng: np.random.Generator,
    noise_level: float = 0.0,
    fs: float = SAMPLING_RATE_HZ,
) -> MotionScript:
    """Workout order and day-to-day tempo come from `rng`; everything else from the signature."""
    tempo = float(rng.uniform(0.97, 1.03))
    order = [activities[i] for i in rng.permutation(len(activities))]

    steps: List[MotionStep] = [MotionStep.rest(LEAD_REST_S, noise_level)]
    for activity in order:
        profile = ACTIVITY_PROFILES[activity]
        for k in range(profile.sets):
            steps.append(activity_step(activity, signature, position, noise_level, tempo=tempo))
            if k < profile.sets - 1:
                steps.append(MotionStep.rest(SET_REST_S, noise_level))
        steps.append(MotionStep.rest(ACTIVITY_REST_S, noise_level))

    elapsed = sum(st.n_samples(fs) for st in steps) / fs
    if elapsed < MIN_SESSION_S:
        steps.append(MotionStep.rest(MIN_SESSION_S - elapsed, noise_level))

    return MotionScript(
        steps=tuple(steps),
        rest_axis=rest_axis_for(signature, position),
        acc_offset=signature.acc_offset,
    )


def build_session(
    subject_id: int,
    day: int,
    position: Position,
    activities: Sequence[ActivityLabel],
    seed: int = 0,
    noise_level: float = 0.0,
    fe: Optional[FrontEndModel] = None,
    fs: float = SAMPLING_RATE_HZ,
) -> Tuple[SessionRecording, List[RepetitionAnnotation]]:
    position = Position(position)
    signature = SubjectSignature.from_seed(seed, subject_id)
    rng = np.random.default_rng([int(seed), int(subject_id), int(day), list(Position).index(position)])
    script = session_script(signature, position, activities, rng, noise_level, fs)
    imu_seed, hbc_seed = (int(v) for v in rng.integers(0, 2**31 - 1, size=2))

    hbc = simulate_hbc(script, fe or FrontEndModel(), fs, seed=hbc_seed).values
    imu = simulate_imu(script, fs, seed=imu_seed)
    signals = np.round(np.column_stack([hbc, imu]), SIGNAL_DECIMALS)

    n = script.n_samples(fs)
    rec = SessionRecording(
        subject_id=int(subject_id),
        day=int(day),
        position=position,
        wearing=WearingConfig.for_day(day),
        timestamps=np.round(np.arange(n) / fs, SIGNAL_DECIMALS),
        signals=signals,
        label_indices=script.label_indices(fs),
    )
    return rec, script.annotations(fs)


def _write_session(args) -> Dict[str, Any]:
    out_dir, subject_id, day, position, activities, seed, noise_level, fe = args
    rec, annotations = build_session(subject_id, day, position, activities, seed, noise_level, fe)
    csv_path = Path(out_dir) / f"{session_stem(subject_id, day, position)}.csv"
    serialize_session(rec, csv_path)
    write_counts(csv_path, annotations)
    return {
        "file": csv_path.name,
        "subject_id": rec.subject_id,
        "day": rec.day,
        "position": rec.position.value,
        "n_frames": rec.n_frames,
        "n_counted_segments": len(annotations),
    }


def generate_dataset(
    out_dir: Path,
    n_subjects: int = 10,
    n_days: int = 5,
    activities: Optional[Sequence[ActivityLabel]] = None,
    seed: int = 0,
    positions: Optional[Sequence[Position]] = None,
    noise_level: float = 0.05,
    fe: Optional[FrontEndModel] = None,
    threads: Optional[int] = None,
    verbose: bool = True,
) -> Path:
    """
    Write a synthetic dataset and return the path of its manifest.

    Output is a pure function of the arguments: the same call twice yields
    byte-identical files.
    """
    if n_subjects < 2:
        raise ValueError(f"n_subjects must be >= 2 for leave-one-user-out evaluation, got {n_subjects}")
    if not 1 <= n_days <= 5:
        raise ValueError(f"n_days must be in 1..5, got {n_days}")
    activities = [ActivityLabel(a) for a in (activities or WORKOUTS)]
    if ActivityLabel.NULL in activities:
        raise ValueError("Null is generated between workouts; do not list it as an activity")
    if len(set(activities)) != len(activities):
        raise ValueError(f"duplicate activities: {[a.value for a in activities]}")
    positions = [Position(p) for p in (positions or list(Position))]

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [
        (out_dir, subject, day, position, activities, seed, noise_level, fe)
        for subject in range(1, n_subjects + 1)
        for day in range(1, n_days + 1)
        for position in positions
    ]

    threads = threads or get_threads()
    progress = tqdm(total=len(jobs), desc="synth", unit="session", disable=not verbose)
    sessions: List[Dict[str, Any]] = []
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            for entry in pool.map(_write_session, jobs):
                sessions.append(entry)
                progress.update(1)
    else:
        for job in jobs:
            sessions.append(_write_session(job))
            progress.update(1)
    progress.close()

    manifest = {
        "generator": "hbcgym.synth",
        "seed": int(seed),
        "n_subjects": int(n_subjects),
        "n_days": int(n_days),
        "activities": [a.value for a in activities],
        "positions": [p.value for p in positions],
        "noise_level": float(noise_level),
        "sampling_rate_hz": SAMPLING_RATE_HZ,
        "front_end": _front_end_dict(fe or FrontEndModel()),
        "sessions": sessions,
    }
    manifest_path = out_dir / MANIFEST_NAME
    with manifest_path.open("w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")

    if verbose:
        print(f"✅ Wrote {len(sessions)} synthetic sessions to {out_dir}")
    return manifest_path


def _front_end_dict(fe: FrontEndModel) -> Dict[str, float]:
    return {
        "base_capacitance": fe.base_capacitance,
        "source_potential": fe.source_potential,
        "supply_current": fe.supply_current,
        "time_constant": fe.tau,
        "coupling": fe.coupling,
        "adc_scale": fe.adc_scale,
        "substeps": fe.substeps,
    }


def read_manifest(data_dir: Path) -> Dict[str, Any]:
    path = Path(data_dir) / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"Dataset manifest not found: {path}")
    return json.loads(path.read_text(encoding="utf-8"))
