# signals/spectral.py
"""
Series container, axis magnitude and brick-wall Fourier smoothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np


DEFAULT_SAMPLING_RATE = 20.0


@dataclass(frozen=True, eq=False)
class Series:
    values: np.ndarray
    sampling_rate: float = DEFAULT_SAMPLING_RATE

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError(f"Series must be a non-empty 1-D sequence, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("Series contains NaN or Inf values")
        if not self.sampling_rate > 0:
            raise ValueError(f"sampling_rate must be > 0, got {self.sampling_rate}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def duration_s(self) -> float:
        return len(self.values) / self.sampling_rate


SeriesLike = Union[Series, np.ndarray, Sequence[float]]


def as_series(s: SeriesLike, sampling_rate: float = DEFAULT_SAMPLING_RATE) -> Series:
    if isinstance(s, Series):
        return s
    return Series(np.asarray(s, dtype=np.float64), sampling_rate)


def magnitude(x: SeriesLike, y: SeriesLike, z: SeriesLike) -> Series:
    """Element-wise Euclidean norm of three axes."""
    x, y, z = as_series(x), as_series(y), as_series(z)
    if not (len(x) == len(y) == len(z)):
        raise ValueError(f"axis length mismatch: {len(x)}, {len(y)}, {len(z)}")
    if not (x.sampling_rate == y.sampling_rate == z.sampling_rate):
        raise ValueError(
            f"axis sampling rate mismatch: {x.sampling_rate}, {y.sampling_rate}, {z.sampling_rate}"
        )
    stacked = np.stack([x.values, y.values, z.values])
    return Series(np.sqrt(np.sum(stacked * stacked, axis=0)), x.sampling_rate)


def bin_frequencies(n: int, sampling_rate: float) -> np.ndarray:
    """Frequencies k*fs/N of the real-input transform bins, computed without 1/fs rounding."""
    return np.arange(n // 2 + 1, dtype=np.float64) * sampling_rate / n


def fourier_lowpass(s: SeriesLike, cutoff_hz: float) -> Series:
    """
    Zero every rfft bin whose frequency is strictly above `cutoff_hz` (DC is
    always kept) and transform back. Output has the input's length.
    """
    s = as_series(s)
    nyquist = s.sampling_rate / 2.0
    if not cutoff_hz > 0:
        raise ValueError(f"cutoff_hz must be > 0, got {cutoff_hz}")
    if cutoff_hz > nyquist:
        raise ValueError(f"cutoff_hz={cutoff_hz} exceeds Nyquist ({nyquist} Hz)")

    n = len(s)
    spectrum = np.fft.rfft(s.values)
    mask = bin_frequencies(n, s.sampling_rate) > cutoff_hz
    mask[0] = False
    spectrum[mask] = 0.0
    return Series(np.fft.irfft(spectrum, n=n), s.sampling_rate)


def spectrum_peak_hz(s: SeriesLike, exclude_dc: bool = True) -> float:
    """Frequency of the largest-magnitude rfft bin."""
    s = as_series(s)
    amp = np.abs(np.fft.rfft(s.values - s.values.mean() if exclude_dc else s.values))
    if exclude_dc:
        amp[0] = 0.0
    return float(bin_frequencies(len(s), s.sampling_rate)[int(np.argmax(amp))])


def band_power_db(s: SeriesLike, above_hz: float, reference_hz: float) -> float:
    """
    Strongest bin above `above_hz` relative to the bin nearest `reference_hz`, in dB.
    Returns -inf when the band is empty or exactly zero.
    """
    s = as_series(s)
    amp = np.abs(np.fft.rfft(s.values))
    freqs = bin_frequencies(len(s), s.sampling_rate)
    ref = amp[int(np.argmin(np.abs(freqs - reference_hz)))]
    band = amp[freqs > above_hz]
    if ref == 0:
        raise ValueError(f"no energy at reference frequency {reference_hz} Hz")
    if band.size == 0 or band.max() == 0:
        return float("-inf")
    return float(20.0 * np.log10(band.max() / ref))
