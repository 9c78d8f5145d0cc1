"""
dataio/dataset_manager.py
Dataset manager for HBC gym session directories
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np

from dataio.sessions import (
    ACTIVITY_LABELS,
    CANONICAL_SCHEMA,
    ActivityLabel,
    Position,
    SessionRecording,
    SessionSchema,
    SessionSchemaError,
    parse_session,
    parse_session_stem,
)
from dataio.windows import WINDOW_LEN, WINDOW_STRIDE, WindowSet, window_set_from_session


MANIFEST_NAME = "manifest.json"
COUNTS_SUFFIX = ".counts.json"


@dataclass(frozen=True)
class SessionEntry:
    stem: str
    subject_id: int
    day: int
    position: Position
    csv_path: Path

    @property
    def json_path(self) -> Path:
        return self.csv_path.with_suffix(".json")

    @property
    def counts_path(self) -> Path:
        return counts_path_for(self.csv_path)


@dataclass(frozen=True)
class RepetitionAnnotation:
    """Ground-truth repetition count for one contiguous exercise run [start, stop)."""

    activity: ActivityLabel
    start: int
    stop: int
    count: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "activity": self.activity.value,
            "start": int(self.start),
            "stop": int(self.stop),
            "count": int(self.count),
        }


# ----------------------------
# Counts sidecar
# ----------------------------

def counts_path_for(csv_path: Path) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + COUNTS_SUFFIX)


def write_counts(csv_path: Path, annotations: Iterable[RepetitionAnnotation]) -> Path:
    path = counts_path_for(csv_path)
    payload = {"segments": [a.to_dict() for a in annotations]}
    with path.open("w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def read_counts(csv_path: Path) -> List[RepetitionAnnotation]:
    path = counts_path_for(csv_path)
    if not path.exists():
        raise FileNotFoundError(f"Repetition counts sidecar not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SessionSchemaError(f"{path}: invalid JSON ({exc})") from exc

    out = []
    for i, seg in enumerate(raw.get("segments", [])):
        try:
            ann = RepetitionAnnotation(
                activity=ActivityLabel(seg["activity"]),
                start=int(seg["start"]),
                stop=int(seg["stop"]),
                count=int(seg["count"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise SessionSchemaError(f"{path}: segment {i} is malformed ({exc})") from exc
        if ann.activity is ActivityLabel.NULL or ann.count < 1 or ann.stop <= ann.start:
            raise SessionSchemaError(f"{path}: segment {i} is not a valid exercise run: {seg}")
        out.append(ann)
    return out


# ----------------------------
# Manifest
# ----------------------------

def load_manifest(data_dir: Path) -> List[SessionEntry]:
    """
    Scan a dataset directory for `S<id>_D<day>_<position>.csv` files.

    Returns entries sorted by (subject, day, position). Files whose stem does
    not follow the naming scheme are ignored.
    """
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise FileNotFoundError(f"Dataset directory not found: {data_dir}")

    entries = []
    for csv_path in data_dir.glob("S*_D*_*.csv"):
        parsed = parse_session_stem(csv_path.stem)
        if parsed is None:
            continue
        subject_id, day, position = parsed
        entries.append(SessionEntry(csv_path.stem, subject_id, day, position, csv_path))

    if not entries:
        raise FileNotFoundError(f"No session files (S<id>_D<day>_<position>.csv) in {data_dir}")

    positions = list(Position)
    entries.sort(key=lambda e: (e.subject_id, e.day, positions.index(e.position)))
    return entries


class DatasetManager:
    """Session dataset manager with per-session and per-position caches"""

    def __init__(
        self,
        data_dir: Path,
        schema: SessionSchema = CANONICAL_SCHEMA,
        verbose: bool = True,
    ):
        """
        Initialize dataset manager

        Args:
            data_dir: directory of session CSV + JSON files
            schema: column / label mapping of the files
            verbose: print status lines
        """
        self.data_dir = Path(data_dir)
        self.schema = schema
        self.verbose = verbose
        self.entries = load_manifest(self.data_dir)

        self._session_cache: Dict[str, SessionRecording] = {}
        self._window_cache: Dict[Tuple[Optional[str], int, int], WindowSet] = {}

        if self.verbose:
            print(f"✅ Opened dataset {self.data_dir}")
            print(f"   Sessions: {len(self.entries)} | Subjects: {self.subjects()}")

    # ---------- listing ----------

    def list_sessions(
        self,
        position: Optional[Position | str] = None,
        subjects: Optional[Iterable[int]] = None,
        days: Optional[Iterable[int]] = None,
    ) -> List[SessionEntry]:
        pos = Position(position) if position is not None else None
        subj = set(subjects) if subjects is not None else None
        dset = set(days) if days is not None else None
        return [
            e
            for e in self.entries
            if (pos is None or e.position is pos)
            and (subj is None or e.subject_id in subj)
            and (dset is None or e.day in dset)
        ]

    def subjects(self, position: Optional[Position | str] = None) -> List[int]:
        return sorted({e.subject_id for e in self.list_sessions(position)})

    def positions(self) -> List[Position]:
        present = {e.position for e in self.entries}
        return [p for p in Position if p in present]

    # ---------- loading ----------

    def load_session(self, entry: SessionEntry) -> SessionRecording:
        if entry.stem not in self._session_cache:
            self._session_cache[entry.stem] = parse_session(entry.csv_path, schema=self.schema)
        return self._session_cache[entry.stem]

    def load_sessions(self, position: Optional[Position | str] = None, **filters) -> List[SessionRecording]:
        return [self.load_session(e) for e in self.list_sessions(position, **filters)]

    def load_windows(
        self,
        position: Optional[Position | str] = None,
        window_len: int = WINDOW_LEN,
        stride: int = WINDOW_STRIDE,
    ) -> WindowSet:
        key = (Position(position).value if position is not None else None, window_len, stride)
        if key not in self._window_cache:
            parts = []
            for rec in self.load_sessions(position):
                ws = window_set_from_session(rec, window_len, stride)
                if ws is not None:
                    parts.append(ws)
            if not parts:
                raise SessionSchemaError(
                    f"No windows of length {window_len} in {self.data_dir} (position={key[0]})"
                )
            self._window_cache[key] = WindowSet.concatenate(parts)
        return self._window_cache[key]

    def has_counts(self, position: Optional[Position | str] = None) -> bool:
        return all(e.counts_path.exists() for e in self.list_sessions(position))

    def load_counts(self, entry: SessionEntry) -> List[RepetitionAnnotation]:
        return read_counts(entry.csv_path)

    # ---------- summaries ----------

    def get_dataset_info(self, position: Optional[Position | str] = None) -> Dict[str, Any]:
        """Per-dataset summary: sessions, subjects, days, frame and class counts."""
        recs = self.load_sessions(position)
        class_counts = np.zeros(len(ACTIVITY_LABELS), dtype=np.int64)
        for rec in recs:
            class_counts += np.bincount(rec.label_indices, minlength=len(ACTIVITY_LABELS))
        return {
            "data_dir": str(self.data_dir),
            "position": Position(position).value if position is not None else None,
            "n_sessions": len(recs),
            "subjects": sorted({r.subject_id for r in recs}),
            "days": sorted({r.day for r in recs}),
            "n_frames": int(sum(r.n_frames for r in recs)),
            "duration_s": float(sum(r.duration_s for r in recs)),
            "frames_per_class": {
                ACTIVITY_LABELS[i].value: int(c) for i, c in enumerate(class_counts) if c > 0
            },
            "has_counts": self.has_counts(position),
        }

    def close(self):
        self._session_cache.clear()
        self._window_cache.clear()
        if self.verbose:
            print(f"✅ Closed dataset {self.data_dir}")
