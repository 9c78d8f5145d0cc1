# nnlib/layers.py
"""
Layer specifications and their torch realizations.

A LayerSpec is plain data (serializable with dataclasses.asdict); build_layer
turns it into an nn.Module given the size of the incoming feature axis.
Shapes follow torch conventions: 2-D layers take [B, maps, height, time],
1-D layers take [B, features, time], attention takes [B, time, features].
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Tuple, Union

import torch
from torch import nn


class LayerShapeError(ValueError):
    pass


class Mode(str, Enum):
    TRAIN = "train"
    EVAL = "eval"


# ----------------------------
# Specifications
# ----------------------------

def _positive(name: str, *values: int) -> None:
    for v in values:
        if v < 1:
            raise ValueError(f"{name} must be positive, got {v}")


@dataclass(frozen=True)
class Conv2dSpec:
    out_maps: int
    kernel: Tuple[int, int]
    padding: str = "same"
    bias: bool = False

    def __post_init__(self):
        _positive("Conv2d", self.out_maps, *self.kernel)
        if self.padding not in ("same", "valid"):
            raise ValueError(f"Conv2d padding must be 'same' or 'valid', got {self.padding!r}")


@dataclass(frozen=True)
class DepthwiseConv2dSpec:
    kernel: Tuple[int, int]
    depth_multiplier: int = 1
    bias: bool = False

    def __post_init__(self):
        _positive("DepthwiseConv2d", self.depth_multiplier, *self.kernel)


@dataclass(frozen=True)
class LayerNormSpec:
    """Normalizes over the feature axes (maps, height) separately at every time step."""

    eps: float = 1e-5

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"LayerNorm eps must be > 0, got {self.eps}")


@dataclass(frozen=True)
class ELUSpec:
    alpha: float = 1.0


@dataclass(frozen=True)
class AvgPool2dSpec:
    kernel: Tuple[int, int]

    def __post_init__(self):
        _positive("AvgPool2d", *self.kernel)


@dataclass(frozen=True)
class DropoutSpec:
    rate: float

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ValueError(f"Dropout rate must be in [0, 1), got {self.rate}")


@dataclass(frozen=True)
class DenseSpec:
    out_dim: int

    def __post_init__(self):
        _positive("Dense", self.out_dim)


@dataclass(frozen=True)
class MultiHeadSelfAttentionSpec:
    heads: int
    model_dim: int

    def __post_init__(self):
        _positive("MultiHeadSelfAttention", self.heads, self.model_dim)
        if self.model_dim % self.heads:
            raise ValueError(f"model_dim {self.model_dim} not divisible by heads {self.heads}")


@dataclass(frozen=True)
class DilatedConv1dSpec:
    filters: int
    kernel: int
    dilation: int

    def __post_init__(self):
        _positive("DilatedConv1d", self.filters, self.kernel, self.dilation)


@dataclass(frozen=True)
class SoftmaxSpec:
    pass


LayerSpec = Union[
    Conv2dSpec,
    DepthwiseConv2dSpec,
    LayerNormSpec,
    ELUSpec,
    AvgPool2dSpec,
    DropoutSpec,
    DenseSpec,
    MultiHeadSelfAttentionSpec,
    DilatedConv1dSpec,
    SoftmaxSpec,
]


def spec_to_dict(spec: LayerSpec) -> dict:
    return {"type": type(spec).__name__, **asdict(spec)}


_SPEC_TYPES = {cls.__name__: cls for cls in LayerSpec.__args__}


def spec_from_dict(raw: dict) -> LayerSpec:
    raw = dict(raw)
    cls = _SPEC_TYPES.get(raw.pop("type", None))
    if cls is None:
        raise ValueError(f"Unknown layer spec: {raw}")
    for k, v in raw.items():
        if isinstance(v, list):
            raw[k] = tuple(v)
    return cls(**raw)


# ----------------------------
# Modules without a direct torch counterpart
# ----------------------------

class FeatureLayerNorm(nn.Module):
    """
    Layer normalization of a [B, F, H, T] map stack over (F, H) at each time
    step, with a per-map affine transform.
    """

    def __init__(self, n_maps: int, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self.weight = nn.Parameter(torch.ones(1, n_maps, 1, 1))
        self.bias = nn.Parameter(torch.zeros(1, n_maps, 1, 1))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() != 4 or x.shape[1] != self.weight.shape[1]:
            raise LayerShapeError(
                f"FeatureLayerNorm({self.weight.shape[1]}): expected [B, {self.weight.shape[1]}, H, T], "
                f"got {tuple(x.shape)}"
            )
        mean = x.mean(dim=(1, 2), keepdim=True)
        var = x.var(dim=(1, 2), keepdim=True, unbiased=False)
        return (x - mean) / torch.sqrt(var + self.eps) * self.weight + self.bias


class SelfAttention(nn.Module):
    """Multi-head self-attention over [B, T, D]: softmax(QK^T / sqrt(d_head)) V, heads projected back to D."""

    def __init__(self, model_dim: int, heads: int):
        super().__init__()
        self.model_dim = model_dim
        self.heads = heads
        self.mha = nn.MultiheadAttention(model_dim, heads, batch_first=True)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() != 3 or x.shape[-1] != self.model_dim:
            raise LayerShapeError(
                f"SelfAttention(D={self.model_dim}): expected [B, T, {self.model_dim}], got {tuple(x.shape)}"
            )
        out, _ = self.mha(x, x, x, need_weights=False)
        return out

    def attention_weights(self, x: torch.Tensor) -> torch.Tensor:
        """Per-head attention matrices [B, heads, T, T]."""
        _, w = self.mha(x, x, x, need_weights=True, average_attn_weights=False)
        return w


# ----------------------------
# Construction
# ----------------------------

def _init_fan_in(weight: torch.Tensor) -> None:
    fan_in = weight[0].numel()
    std = 1.0 / math.sqrt(fan_in)
    nn.init.trunc_normal_(weight, std=std, a=-2 * std, b=2 * std)


def build_layer(spec: LayerSpec, in_dim: int) -> nn.Module:
    """
    Build the module for `spec`; `in_dim` is the incoming feature-map count
    (channels for convolutions and norms, feature size for dense / attention).
    """
    if isinstance(spec, Conv2dSpec):
        layer = nn.Conv2d(in_dim, spec.out_maps, spec.kernel, padding=spec.padding, bias=spec.bias)
        _init_fan_in(layer.weight)
    elif isinstance(spec, DepthwiseConv2dSpec):
        layer = nn.Conv2d(
            in_dim, in_dim * spec.depth_multiplier, spec.kernel, groups=in_dim, bias=spec.bias
        )
        _init_fan_in(layer.weight)
    elif isinstance(spec, LayerNormSpec):
        layer = FeatureLayerNorm(in_dim, spec.eps)
    elif isinstance(spec, ELUSpec):
        layer = nn.ELU(alpha=spec.alpha)
    elif isinstance(spec, AvgPool2dSpec):
        layer = nn.AvgPool2d(spec.kernel)
    elif isinstance(spec, DropoutSpec):
        layer = nn.Dropout(spec.rate)
    elif isinstance(spec, DenseSpec):
        layer = nn.Linear(in_dim, spec.out_dim)
        _init_fan_in(layer.weight)
        nn.init.zeros_(layer.bias)
    elif isinstance(spec, MultiHeadSelfAttentionSpec):
        if in_dim != spec.model_dim:
            raise LayerShapeError(f"MultiHeadSelfAttention(D={spec.model_dim}) fed {in_dim} features")
        layer = SelfAttention(spec.model_dim, spec.heads)
    elif isinstance(spec, DilatedConv1dSpec):
        layer = nn.Conv1d(
            in_dim, spec.filters, spec.kernel, dilation=spec.dilation, padding="same", bias=True
        )
        _init_fan_in(layer.weight)
        nn.init.zeros_(layer.bias)
    elif isinstance(spec, SoftmaxSpec):
        layer = nn.Softmax(dim=-1)
    else:
        raise TypeError(f"Unsupported layer spec: {spec!r}")
    return layer


def out_dim(spec: LayerSpec, in_dim: int) -> int:
    if isinstance(spec, Conv2dSpec):
        return spec.out_maps
    if isinstance(spec, DepthwiseConv2dSpec):
        return in_dim * spec.depth_multiplier
    if isinstance(spec, DenseSpec):
        return spec.out_dim
    if isinstance(spec, DilatedConv1dSpec):
        return spec.filters
    return in_dim


def forward(layer: nn.Module, x: torch.Tensor, mode: Mode = Mode.EVAL) -> torch.Tensor:
    """Run one layer in the given mode; incompatible inputs raise LayerShapeError."""
    layer.train(Mode(mode) is Mode.TRAIN)
    try:
        return layer(x)
    except LayerShapeError:
        raise
    except (RuntimeError, AssertionError, ValueError) as exc:
        raise LayerShapeError(
            f"{type(layer).__name__}: incompatible input shape {tuple(x.shape)} ({exc})"
        ) from exc


def backward(loss: torch.Tensor) -> None:
    """Populate .grad on every tracked leaf reachable from a scalar loss."""
    if loss.dim() != 0:
        raise ValueError(f"backward needs a scalar loss, got shape {tuple(loss.shape)}")
    if not loss.requires_grad:
        raise ValueError("loss is not attached to a tracked computation")
    loss.backward()
