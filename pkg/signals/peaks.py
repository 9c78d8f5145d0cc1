# signals/peaks.py
"""
Peak detection with the PeakUtils `indexes` contract:

- absolute level = thres * (max - min) + min
- candidates are strict local maxima above that level (plateaus are not peaks)
- conflicts resolved greedily by descending amplitude; each kept peak
  suppresses every candidate j with |i - j| <= min_distance
- equal amplitudes: lower index is visited first
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from signals.spectral import SeriesLike, as_series


@dataclass(frozen=True)
class PeakParams:
    threshold: float
    min_distance: int

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")
        if int(self.min_distance) != self.min_distance or self.min_distance < 1:
            raise ValueError(f"min_distance must be an integer >= 1, got {self.min_distance}")
        object.__setattr__(self, "min_distance", int(self.min_distance))

    def to_dict(self) -> dict:
        return {"threshold": float(self.threshold), "min_distance": int(self.min_distance)}


def detect_peaks(s: SeriesLike, p: PeakParams) -> List[int]:
    y = as_series(s).values
    if len(y) < 3:
        raise ValueError(f"detect_peaks needs at least 3 samples, got {len(y)}")

    lo, hi = y.min(), y.max()
    if hi == lo:
        return []
    level = p.threshold * (hi - lo) + lo

    mid = y[1:-1]
    is_peak = (mid > y[:-2]) & (mid > y[2:]) & (mid > level)
    candidates = np.flatnonzero(is_peak) + 1
    if len(candidates) < 2:
        return candidates.tolist()

    # lexsort: last key is primary -> amplitude descending, then index ascending
    order = candidates[np.lexsort((candidates, -y[candidates]))]
    suppressed = np.zeros(len(y), dtype=bool)
    kept = []
    md = p.min_distance
    for idx in order:
        if suppressed[idx]:
            continue
        kept.append(int(idx))
        suppressed[max(0, idx - md): idx + md + 1] = True
    return sorted(kept)
