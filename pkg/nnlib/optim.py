# nnlib/optim.py
"""
Adam (torch.optim.Adam with fixed betas/eps) driven by a staircase learning-rate schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import torch


ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


class MissingGradientError(RuntimeError):
    pass


@dataclass(frozen=True)
class LrSchedule:
    initial: float = 1e-4
    decay_rate: float = 0.5
    decay_steps: int = 200
    staircase: bool = True

    def __post_init__(self):
        if not self.initial > 0:
            raise ValueError(f"initial lr must be > 0, got {self.initial}")
        if not 0 < self.decay_rate <= 1:
            raise ValueError(f"decay_rate must be in (0, 1], got {self.decay_rate}")
        if self.decay_steps < 1:
            raise ValueError(f"decay_steps must be >= 1, got {self.decay_steps}")

    def lr_at(self, step: int) -> float:
        """initial * decay_rate ** floor(step / decay_steps); step counts optimizer updates."""
        if step < 0:
            raise ValueError(f"step must be >= 0, got {step}")
        exponent = step // self.decay_steps if self.staircase else step / self.decay_steps
        return self.initial * self.decay_rate ** exponent

    def to_dict(self) -> dict:
        return {
            "initial": self.initial,
            "decay_rate": self.decay_rate,
            "decay_steps": self.decay_steps,
            "staircase": self.staircase,
        }


def lr_at(sched: LrSchedule, step: int) -> float:
    return sched.lr_at(step)


def make_adam(params: Iterable[torch.nn.Parameter], lr: float = 1e-4) -> torch.optim.Adam:
    return torch.optim.Adam(params, lr=lr, betas=ADAM_BETAS, eps=ADAM_EPS)


def adam_step(optimizer: torch.optim.Adam, lr: float) -> None:
    """One bias-corrected Adam update at learning rate `lr`; every trainable parameter needs a gradient."""
    if not (lr > 0 and math.isfinite(lr)):
        raise ValueError(f"lr must be a positive finite number, got {lr}")
    for gi, group in enumerate(optimizer.param_groups):
        for pi, p in enumerate(group["params"]):
            if p.requires_grad and p.grad is None:
                raise MissingGradientError(
                    f"parameter {pi} of group {gi} (shape {tuple(p.shape)}) has no gradient"
                )
        group["lr"] = lr
    optimizer.step()


def adam_step_count(optimizer: torch.optim.Adam) -> int:
    steps = [int(s["step"]) for s in optimizer.state.values() if "step" in s]
    return max(steps) if steps else 0
