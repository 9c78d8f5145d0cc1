# dataio/sessions.py
"""
Session data format: label/position/wearing enumerations, the in-memory
SessionRecording, and the canonical CSV + JSON sidecar reader/writer.

Canonical CSV header:

    timestamp,hbc,ax,ay,az,gx,gy,gz,label

Metadata sidecar (same stem, .json):

    {"subject_id": 3, "day": 2, "position": "wrist",
     "clothes_material": "cotton", "sole_height": "M", "sole_material": "PVC"}
"""

from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd


SAMPLING_RATE_HZ = 20.0
MIN_PLAUSIBLE_DURATION_S = 10 * 60.0
MAX_PLAUSIBLE_DURATION_S = 3 * 60 * 60.0
JITTER_TOLERANCE = 0.2


# ----------------------------
# Errors / warnings
# ----------------------------

class SessionParseError(ValueError):
    """Malformed session file. `line` is the 1-based line number in the CSV (header = 1)."""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message)
        self.line = line


class SessionIntegrityError(SessionParseError):
    """Timestamps are not strictly increasing."""


class SessionSchemaError(SessionParseError):
    """Header, channel set or metadata does not match the declared schema."""


class DataQualityWarning(UserWarning):
    """Plausibility findings that do not block ingestion (duration, jitter)."""


# ----------------------------
# Enumerations
# ----------------------------

class ActivityLabel(str, Enum):
    ADDUCTOR = "Adductor"
    ARMCURL = "Armcurl"
    BENCHPRESS = "Benchpress"
    LEGCURL = "Legcurl"
    LEGPRESS = "Legpress"
    RIDING = "Riding"
    ROPESKIPPING = "Ropeskipping"
    RUNNING = "Running"
    SQUAT = "Squat"
    STAIRSCLIMBER = "Stairsclimber"
    WALKING = "Walking"
    NULL = "Null"

    @property
    def index(self) -> int:
        return ACTIVITY_LABELS.index(self)

    @classmethod
    def from_index(cls, idx: int) -> "ActivityLabel":
        return ACTIVITY_LABELS[int(idx)]


# Class index order used by every model and confusion matrix.
ACTIVITY_LABELS: List[ActivityLabel] = list(ActivityLabel)
N_ACTIVITY_CLASSES = len(ACTIVITY_LABELS)
WORKOUTS: List[ActivityLabel] = [a for a in ACTIVITY_LABELS if a is not ActivityLabel.NULL]


class Position(str, Enum):
    WRIST = "wrist"
    LEG = "leg"
    POCKET = "pocket"


class ClothesMaterial(str, Enum):
    COTTON = "cotton"
    POLYESTER = "polyester"


class SoleHeight(str, Enum):
    M = "M"
    S = "S"


class SoleMaterial(str, Enum):
    PVC = "PVC"
    RUBBER = "rubber"


@dataclass(frozen=True)
class WearingConfig:
    clothes_material: ClothesMaterial
    sole_height: SoleHeight
    sole_material: SoleMaterial

    @classmethod
    def for_day(cls, day: int) -> "WearingConfig":
        """Wearing configuration of the collection protocol for a given day (1..5)."""
        if day not in _WEARING_BY_DAY:
            raise ValueError(f"day must be in 1..5, got {day!r}")
        clothes, height, sole = _WEARING_BY_DAY[day]
        return cls(ClothesMaterial(clothes), SoleHeight(height), SoleMaterial(sole))

    def to_dict(self) -> Dict[str, str]:
        return {
            "clothes_material": self.clothes_material.value,
            "sole_height": self.sole_height.value,
            "sole_material": self.sole_material.value,
        }


_WEARING_BY_DAY = {
    1: ("cotton", "M", "PVC"),
    2: ("cotton", "M", "PVC"),
    3: ("polyester", "M", "PVC"),
    4: ("cotton", "S", "PVC"),
    5: ("cotton", "M", "rubber"),
}


# ----------------------------
# Schema
# ----------------------------

SIGNAL_COLUMNS: Tuple[str, ...] = ("hbc", "ax", "ay", "az", "gx", "gy", "gz")
CSV_COLUMNS: Tuple[str, ...] = ("timestamp", *SIGNAL_COLUMNS, "label")
HBC_CHANNELS = slice(0, 1)
ACC_CHANNELS = slice(1, 4)
GYRO_CHANNELS = slice(4, 7)
IMU_CHANNELS = slice(1, 7)

_SQUAT_VARIANTS = {
    f"{prefix}_{ground}": ActivityLabel.SQUAT
    for prefix in ("Squat", "squat")
    for ground in ("concrete", "wood", "rubber")
}


@dataclass(frozen=True)
class SessionSchema:
    """
    Maps the canonical column names onto the columns of a concrete file layout.

    `columns` is canonical name -> file column name; `label_aliases` maps extra
    label tokens onto ActivityLabel members (exact enum tokens are always accepted).
    """

    name: str = "canonical"
    columns: Mapping[str, str] = field(default_factory=lambda: {c: c for c in CSV_COLUMNS})
    label_aliases: Mapping[str, ActivityLabel] = field(default_factory=lambda: dict(_SQUAT_VARIANTS))

    @classmethod
    def from_json(cls, path: Path) -> "SessionSchema":
        """
        Load an adapter schema:
          {"name": "...", "columns": {"timestamp": "time_s", ...}, "label_aliases": {"jog": "Running"}}
        Unlisted canonical columns keep their canonical name.
        """
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        columns = {c: c for c in CSV_COLUMNS}
        columns.update(raw.get("columns", {}))
        unknown = set(columns) - set(CSV_COLUMNS)
        if unknown:
            raise SessionSchemaError(f"Schema {path} maps unknown canonical columns: {sorted(unknown)}")
        aliases = dict(_SQUAT_VARIANTS)
        for token, target in raw.get("label_aliases", {}).items():
            try:
                aliases[token] = ActivityLabel(target)
            except ValueError as exc:
                raise SessionSchemaError(f"Schema {path}: alias {token!r} -> unknown label {target!r}") from exc
        return cls(name=raw.get("name", Path(path).stem), columns=columns, label_aliases=aliases)

    def resolve_label(self, token: str) -> Optional[ActivityLabel]:
        try:
            return ActivityLabel(token)
        except ValueError:
            return self.label_aliases.get(token)


CANONICAL_SCHEMA = SessionSchema()


# ----------------------------
# Frames / recordings
# ----------------------------

@dataclass(frozen=True)
class SampleFrame:
    timestamp: float
    hbc: float
    acc: Tuple[float, float, float]
    gyro: Tuple[float, float, float]
    label: ActivityLabel


@dataclass(frozen=True, eq=False)
class SessionRecording:
    """
    One session: synchronized HBC + IMU at 20 Hz with per-sample labels.

    Signals are stored column-wise (`signals[:, 0]` = hbc, `[:, 1:4]` = acc,
    `[:, 4:7]` = gyro); `frames` materializes the per-sample view.
    """

    subject_id: int
    day: int
    position: Position
    wearing: WearingConfig
    timestamps: np.ndarray
    signals: np.ndarray
    label_indices: np.ndarray
    source: str = ""

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.float64)
        sig = np.asarray(self.signals, dtype=np.float64)
        lab = np.asarray(self.label_indices, dtype=np.int64)
        if sig.ndim != 2 or sig.shape[1] != len(SIGNAL_COLUMNS):
            raise SessionSchemaError(f"signals must be [n, {len(SIGNAL_COLUMNS)}], got {sig.shape}")
        if not (len(ts) == len(sig) == len(lab)):
            raise SessionSchemaError(
                f"length mismatch: timestamps={len(ts)} signals={len(sig)} labels={len(lab)}"
            )
        for arr in (ts, sig, lab):
            arr.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "signals", sig)
        object.__setattr__(self, "label_indices", lab)

    @property
    def n_frames(self) -> int:
        return len(self.timestamps)

    @property
    def session_id(self) -> str:
        return self.source or session_stem(self.subject_id, self.day, self.position)

    @property
    def duration_s(self) -> float:
        if self.n_frames < 2:
            return 0.0
        return float(self.timestamps[-1] - self.timestamps[0])

    @property
    def labels(self) -> List[ActivityLabel]:
        return [ACTIVITY_LABELS[i] for i in self.label_indices]

    @property
    def frames(self) -> List[SampleFrame]:
        out = []
        for t, row, li in zip(self.timestamps, self.signals, self.label_indices):
            out.append(
                SampleFrame(
                    timestamp=float(t),
                    hbc=float(row[0]),
                    acc=(float(row[1]), float(row[2]), float(row[3])),
                    gyro=(float(row[4]), float(row[5]), float(row[6])),
                    label=ACTIVITY_LABELS[int(li)],
                )
            )
        return out

    def metadata(self) -> Dict[str, Any]:
        return {
            "subject_id": int(self.subject_id),
            "day": int(self.day),
            "position": self.position.value,
            **self.wearing.to_dict(),
        }


# ----------------------------
# File naming
# ----------------------------

_STEM_RE = re.compile(r"^S(\d+)_D(\d+)_(wrist|leg|pocket)$")


def session_stem(subject_id: int, day: int, position: Position | str) -> str:
    return f"S{int(subject_id)}_D{int(day)}_{Position(position).value}"


def parse_session_stem(stem: str) -> Optional[Tuple[int, int, Position]]:
    m = _STEM_RE.match(stem)
    if not m:
        return None
    return int(m.group(1)), int(m.group(2)), Position(m.group(3))


# ----------------------------
# Metadata
# ----------------------------

def parse_metadata(raw: Mapping[str, Any], where: str = "metadata") -> Dict[str, Any]:
    """Validate a metadata dict against the enumerations; returns normalized fields."""
    required = ("subject_id", "day", "position", "clothes_material", "sole_height", "sole_material")
    missing = [k for k in required if k not in raw]
    if missing:
        raise SessionSchemaError(f"{where}: missing metadata fields {missing}")

    try:
        subject_id = int(raw["subject_id"])
        day = int(raw["day"])
    except (TypeError, ValueError) as exc:
        raise SessionSchemaError(f"{where}: subject_id/day must be integers") from exc
    if subject_id < 1:
        raise SessionSchemaError(f"{where}: subject_id must be >= 1, got {subject_id}")
    if day not in _WEARING_BY_DAY:
        raise SessionSchemaError(f"{where}: day must be in 1..5, got {day}")

    try:
        position = Position(str(raw["position"]).lower())
        wearing = WearingConfig(
            ClothesMaterial(raw["clothes_material"]),
            SoleHeight(raw["sole_height"]),
            SoleMaterial(raw["sole_material"]),
        )
    except ValueError as exc:
        raise SessionSchemaError(f"{where}: {exc}") from exc

    return {"subject_id": subject_id, "day": day, "position": position, "wearing": wearing}


def read_metadata(path: Path) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise SessionSchemaError(f"Metadata sidecar not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SessionSchemaError(f"{path}: invalid JSON ({exc})") from exc
    return parse_metadata(raw, where=str(path))


# ----------------------------
# Parsing
# ----------------------------

_PANDAS_LINE_RE = re.compile(r"line (\d+)")


def _read_raw_csv(path: Path) -> pd.DataFrame:
    try:
        return pd.read_csv(
            path,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
            encoding="utf-8",
        )
    except pd.errors.ParserError as exc:
        m = _PANDAS_LINE_RE.search(str(exc))
        line = int(m.group(1)) if m else None
        raise SessionParseError(f"{path}: malformed row at line {line}: {exc}", line=line) from exc
    except pd.errors.EmptyDataError as exc:
        raise SessionSchemaError(f"{path}: empty file, expected header {','.join(CSV_COLUMNS)}") from exc


def _check_timestamps(ts: np.ndarray, path: Path, sampling_rate: float) -> None:
    if len(ts) < 2:
        return
    dt = np.diff(ts)
    bad = np.flatnonzero(dt <= 0)
    if bad.size:
        row = int(bad[0]) + 1
        line = row + 2
        raise SessionIntegrityError(
            f"{path}: timestamp at line {line} ({ts[row]!r}) does not increase "
            f"(previous {ts[row - 1]!r})",
            line=line,
        )

    nominal = 1.0 / sampling_rate
    jitter = np.abs(dt - nominal) > JITTER_TOLERANCE * nominal
    if jitter.any():
        first = int(np.flatnonzero(jitter)[0]) + 3
        warnings.warn(
            f"{path}: {int(jitter.sum())} sample gaps deviate more than "
            f"{int(JITTER_TOLERANCE * 100)}% from {nominal * 1000:.0f} ms (first at line {first})",
            DataQualityWarning,
            stacklevel=3,
        )

    duration = float(ts[-1] - ts[0])
    if duration < MIN_PLAUSIBLE_DURATION_S or duration > MAX_PLAUSIBLE_DURATION_S:
        warnings.warn(
            f"{path}: session duration {duration / 60:.1f} min is outside the plausible "
            f"{MIN_PLAUSIBLE_DURATION_S / 60:.0f} min .. {MAX_PLAUSIBLE_DURATION_S / 3600:.0f} h range",
            DataQualityWarning,
            stacklevel=3,
        )


def parse_session(
    path: Path,
    schema: SessionSchema = CANONICAL_SCHEMA,
    metadata: Optional[Mapping[str, Any]] = None,
    sampling_rate: float = SAMPLING_RATE_HZ,
) -> SessionRecording:
    """
    Parse one session CSV into a validated SessionRecording.

    Metadata comes from `metadata` when given, else from the .json sidecar next
    to the CSV.

    Raises:
        SessionSchemaError: missing columns / metadata fields.
        SessionParseError: non-numeric or non-finite values, unknown labels (with line number).
        SessionIntegrityError: timestamps not strictly increasing (with line number).
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Session file not found: {path}")

    meta = (
        parse_metadata(metadata, where=str(path))
        if metadata is not None
        else read_metadata(path.with_suffix(".json"))
    )

    df = _read_raw_csv(path)
    header = [c.strip() for c in df.columns]
    df.columns = header

    file_cols = {canon: schema.columns[canon] for canon in CSV_COLUMNS}
    missing = [canon for canon, col in file_cols.items() if col not in header]
    if missing:
        raise SessionSchemaError(
            f"{path}: header does not match schema {schema.name!r}; missing channels "
            f"{[file_cols[m] for m in missing]}",
            line=1,
        )

    numeric_cols = ("timestamp", *SIGNAL_COLUMNS)
    values = np.empty((len(df), len(numeric_cols)), dtype=np.float64)
    for j, canon in enumerate(numeric_cols):
        raw = df[file_cols[canon]].str.strip()
        col = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=np.float64)
        bad = ~np.isfinite(col)
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise SessionParseError(
                f"{path}: line {row + 2}: column {file_cols[canon]!r} value {raw.iloc[row]!r} "
                f"is not a finite number",
                line=row + 2,
            )
        # numpy's string->float conversion is correctly rounded; keeps CSV round-trips bit-exact
        values[:, j] = raw.to_numpy(dtype=str).astype(np.float64)

    tokens = df[file_cols["label"]]
    lookup: Dict[str, int] = {}
    label_idx = np.empty(len(df), dtype=np.int64)
    for row, token in enumerate(tokens):
        if token not in lookup:
            label = schema.resolve_label(token)
            if label is None:
                raise SessionParseError(
                    f"{path}: line {row + 2}: unknown label {token!r}",
                    line=row + 2,
                )
            lookup[token] = label.index
        label_idx[row] = lookup[token]

    _check_timestamps(values[:, 0], path, sampling_rate)

    return SessionRecording(
        subject_id=meta["subject_id"],
        day=meta["day"],
        position=meta["position"],
        wearing=meta["wearing"],
        timestamps=values[:, 0],
        signals=values[:, 1:],
        label_indices=label_idx,
        source=path.stem,
    )


# ----------------------------
# Writing
# ----------------------------

def session_to_frame(rec: SessionRecording) -> pd.DataFrame:
    df = pd.DataFrame(rec.signals, columns=list(SIGNAL_COLUMNS))
    df.insert(0, "timestamp", rec.timestamps)
    df["label"] = [ACTIVITY_LABELS[i].value for i in rec.label_indices]
    return df


def serialize_session(rec: SessionRecording, csv_path: Path) -> Tuple[Path, Path]:
    """Write the canonical CSV and its .json metadata sidecar. Floats are written round-trip exact."""
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    session_to_frame(rec).to_csv(csv_path, index=False, lineterminator="\n")

    json_path = csv_path.with_suffix(".json")
    with json_path.open("w", encoding="utf-8") as f:
        json.dump(rec.metadata(), f, indent=2, sort_keys=True)
        f.write("\n")
    return csv_path, json_path
