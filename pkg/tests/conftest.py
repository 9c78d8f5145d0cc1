"""
Shared fixtures: in-memory recordings, CSV writers and a small noiseless
synthetic dataset built once per test session.
"""

import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pytest

# Add project root to path
ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from dataio.sessions import (  # noqa: E402
    CSV_COLUMNS,
    ActivityLabel,
    Position,
    SessionRecording,
    WearingConfig,
)
from synth.generator import generate_dataset  # noqa: E402


FS = 20.0
SMALL_ACTIVITIES = [ActivityLabel.SQUAT, ActivityLabel.ARMCURL, ActivityLabel.RUNNING]

DEFAULT_METADATA = {
    "subject_id": 1,
    "day": 1,
    "position": "wrist",
    "clothes_material": "cotton",
    "sole_height": "M",
    "sole_material": "PVC",
}


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: trains networks end to end")


def make_recording(
    labels: Sequence,
    subject_id: int = 1,
    day: int = 1,
    position: Position = Position.WRIST,
    signals: Optional[np.ndarray] = None,
    source: str = "",
) -> SessionRecording:
    """Recording with one label per frame; signals default to a per-frame ramp."""
    lab = np.array([ActivityLabel(l).index if not isinstance(l, (int, np.integer)) else int(l) for l in labels])
    n = len(lab)
    if signals is None:
        signals = np.tile(np.arange(n, dtype=np.float64)[:, None], (1, 7)) + np.arange(7)
    return SessionRecording(
        subject_id=subject_id,
        day=day,
        position=Position(position),
        wearing=WearingConfig.for_day(day),
        timestamps=np.arange(n) / FS,
        signals=signals,
        label_indices=lab,
        source=source,
    )


def write_session_csv(
    directory: Path,
    rows: Sequence[Sequence],
    stem: str = "S1_D1_wrist",
    metadata: Optional[dict] = None,
    header: Sequence[str] = CSV_COLUMNS,
) -> Path:
    """Write `rows` (already formatted cells) plus a metadata sidecar; returns the CSV path."""
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / f"{stem}.csv"
    lines = [",".join(header)] + [",".join(str(c) for c in r) for r in rows]
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    meta = dict(DEFAULT_METADATA if metadata is None else metadata)
    csv_path.with_suffix(".json").write_text(json.dumps(meta), encoding="utf-8")
    return csv_path


def session_rows(n: int, label: str = "Null", dt: float = 0.05) -> list:
    return [
        [f"{i * dt:.2f}", "1650.0", "0.1", "0.2", "9.81", "0.0", "0.01", "-0.02", label]
        for i in range(n)
    ]


@pytest.fixture
def recording_factory():
    return make_recording


@pytest.fixture(scope="session")
def synthetic_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("synthetic")
    generate_dataset(
        out,
        n_subjects=2,
        n_days=2,
        activities=SMALL_ACTIVITIES,
        seed=3,
        positions=[Position.WRIST],
        noise_level=0.0,
        threads=1,
        verbose=False,
    )
    return out
