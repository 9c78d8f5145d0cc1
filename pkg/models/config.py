# models/config.py
"""
Architecture constants of the hybrid CNN / dilated self-attention network.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Any, Dict, List, Tuple

from dataio.sessions import N_ACTIVITY_CLASSES
from dataio.windows import SignalSource


# (branch name, sensor channels) per source; combined keeps the HBC channel first
_BRANCHES = {
    SignalSource.HBC: [("hbc", 1)],
    SignalSource.IMU: [("imu", 6)],
    SignalSource.COMBINED: [("hbc", 1), ("imu", 6)],
}


@dataclass(frozen=True)
class ModelConfig:
    signal_source: SignalSource = SignalSource.COMBINED
    sampling_rate: int = 20
    window_len: int = 80
    n_classes: int = N_ACTIVITY_CLASSES

    conv1_maps: int = 32
    depth_multiplier: int = 2
    conv3_filters: int = 128
    conv3_kernel: int = 10
    pool: int = 2
    dropout: float = 0.1

    n_attention_windows: int = 4
    heads: int = 4
    dilated_layers: int = 2
    dilated_filters: int = 32
    dilated_kernel: int = 3
    dilation: int = 2
    share_window_weights: bool = True

    def __post_init__(self):
        object.__setattr__(self, "signal_source", SignalSource(self.signal_source))
        if self.sampling_rate % 2:
            raise ValueError(f"sampling_rate/2 must be integral, got sampling_rate={self.sampling_rate}")
        if self.window_len % (self.pool * self.pool):
            raise ValueError(f"window_len {self.window_len} does not survive two (1,{self.pool}) pools")
        if self.feature_len % self.n_attention_windows:
            raise ValueError(
                f"feature length {self.feature_len} not divisible into {self.n_attention_windows} windows"
            )
        if self.n_classes < 2:
            raise ValueError(f"n_classes must be >= 2, got {self.n_classes}")
        if self.feature_dim % self.heads:
            raise ValueError(f"feature dim {self.feature_dim} not divisible by {self.heads} heads")

    @property
    def conv1_kernel(self) -> Tuple[int, int]:
        return (1, self.sampling_rate // 2)

    @property
    def feature_len(self) -> int:
        return self.window_len // self.pool // self.pool

    @property
    def window_steps(self) -> int:
        return self.feature_len // self.n_attention_windows

    @property
    def branches(self) -> List[Tuple[str, int]]:
        return list(_BRANCHES[self.signal_source])

    @property
    def n_channels(self) -> int:
        return self.signal_source.n_channels

    @property
    def feature_dim(self) -> int:
        return self.conv3_filters * len(self.branches)

    def with_(self, **changes) -> "ModelConfig":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["signal_source"] = self.signal_source.value
        return d

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "ModelConfig":
        return cls(**raw)
