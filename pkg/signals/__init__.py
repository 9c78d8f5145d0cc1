"""
signals package

Fourier smoothing and peak detection primitives used by repetition counting.
"""

from .spectral import Series, as_series, fourier_lowpass, magnitude, spectrum_peak_hz
from .peaks import PeakParams, detect_peaks

__all__ = [
    "Series",
    "as_series",
    "fourier_lowpass",
    "magnitude",
    "spectrum_peak_hz",
    "PeakParams",
    "detect_peaks",
]
