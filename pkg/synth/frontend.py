# synth/frontend.py
"""
Charging / discharging model of the body-potential front end.

The body capacitance C_B(t) = C0 * (1 + m * depth * s(t)) follows the motion
waveform s. The surface potential relaxes toward VS with time constant tau
and is pushed by capacitance changes (charge conservation):

    dV/dt = (VS - V) / tau - (V / C) * dC/dt

Within a substep dC/dt / C is held constant, which makes the update an exact
exponential relaxation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from signals.spectral import Series
from synth.motion import MotionScript, step_noise_sigma


C_B_MIN = 50e-12
C_B_MAX = 600e-12


@dataclass(frozen=True)
class FrontEndModel:
    base_capacitance: float = 220e-12
    source_potential: float = 1.65
    supply_current: float = 1.452e-8
    time_constant: Optional[float] = None
    coupling: float = 0.3
    adc_scale: float = 1e3
    substeps: int = 8

    def __post_init__(self):
        if not C_B_MIN <= self.base_capacitance <= C_B_MAX:
            raise ValueError(
                f"base capacitance {self.base_capacitance:.3g} F outside [{C_B_MIN:.0e}, {C_B_MAX:.0e}] F"
            )
        if not self.tau > 0:
            raise ValueError(f"time constant must be > 0, got {self.tau}")
        if self.substeps < 1:
            raise ValueError(f"substeps must be >= 1, got {self.substeps}")
        if not 0 <= self.coupling < 1:
            raise ValueError(f"coupling must be in [0, 1), got {self.coupling}")

    @property
    def tau(self) -> float:
        """Explicit time constant, else C0 * VS / IS."""
        if self.time_constant is not None:
            return self.time_constant
        return self.base_capacitance * self.source_potential / self.supply_current

    def capacitance(self, motion: np.ndarray) -> np.ndarray:
        c = self.base_capacitance * (1.0 + self.coupling * np.asarray(motion, dtype=np.float64))
        if c.size and (c.min() < C_B_MIN or c.max() > C_B_MAX):
            raise ValueError(
                f"body capacitance leaves [{C_B_MIN:.0e}, {C_B_MAX:.0e}] F "
                f"(range {c.min():.3g}..{c.max():.3g} F); lower the coupling or motion depth"
            )
        return c

    def relax(self, capacitance: np.ndarray, dt: float, v0: float = 0.0) -> np.ndarray:
        """
        Integrate the potential over a capacitance trace sampled every `dt`.
        Returns V at every sample of the trace (V[0] = v0).
        """
        c = np.asarray(capacitance, dtype=np.float64)
        out = np.empty_like(c)
        if c.size == 0:
            return out
        inv_tau = 1.0 / self.tau
        dlnc = np.diff(np.log(c)) / dt
        rate = inv_tau + dlnc
        if np.any(rate <= 0):
            raise ValueError("capacitance changes faster than the front end can relax; lower the coupling")
        v_inf = self.source_potential * inv_tau / rate
        decay = np.exp(-rate * dt)

        v = v0
        out[0] = v
        for i in range(len(dlnc)):
            v = v_inf[i] + (v - v_inf[i]) * decay[i]
            out[i + 1] = v
        return out


def simulate_hbc(
    script: MotionScript,
    fe: Optional[FrontEndModel] = None,
    fs: float = 20.0,
    seed: int = 0,
    v0: Optional[float] = None,
) -> Series:
    """
    Body-potential reading (ADC units) at `fs` for a motion script.

    The potential starts at `v0` (default: settled at VS) and is integrated at
    fs * substeps; each step's noise is Gaussian with std noise_level times
    the clean reading's std over that step.
    """
    fe = fe or FrontEndModel()
    k = fe.substeps
    s_fine, _ = script.phase_traces(fs, oversample=k)
    depth = script.per_sample(fs, [st.amp("hbc") if st.is_moving else 0.0 for st in script.steps], oversample=k)

    dt = 1.0 / (fs * k)
    start = fe.source_potential if v0 is None else v0
    v = fe.relax(fe.capacitance(depth * s_fine), dt, v0=start)
    reading = fe.adc_scale * v[::k]

    sigma = step_noise_sigma(script, reading, fs, "hbc")
    if np.any(sigma > 0):
        rng = np.random.default_rng(seed)
        reading = reading + rng.standard_normal(reading.shape) * sigma
    return Series(reading, fs)
