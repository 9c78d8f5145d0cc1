"""
nnlib package

Layer specifications, shape-checked forward, Adam with a staircase schedule,
weighted cross-entropy and checkpoints, on top of torch.
"""

from .layers import (
    AvgPool2dSpec,
    Conv2dSpec,
    DenseSpec,
    DepthwiseConv2dSpec,
    DilatedConv1dSpec,
    DropoutSpec,
    ELUSpec,
    FeatureLayerNorm,
    LayerNormSpec,
    LayerShapeError,
    LayerSpec,
    Mode,
    MultiHeadSelfAttentionSpec,
    SelfAttention,
    SoftmaxSpec,
    backward,
    build_layer,
    forward,
)
from .losses import weighted_cross_entropy
from .optim import LrSchedule, MissingGradientError, adam_step, lr_at, make_adam
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "AvgPool2dSpec",
    "Conv2dSpec",
    "DenseSpec",
    "DepthwiseConv2dSpec",
    "DilatedConv1dSpec",
    "DropoutSpec",
    "ELUSpec",
    "FeatureLayerNorm",
    "LayerNormSpec",
    "LayerShapeError",
    "LayerSpec",
    "Mode",
    "MultiHeadSelfAttentionSpec",
    "SelfAttention",
    "SoftmaxSpec",
    "backward",
    "build_layer",
    "forward",
    "weighted_cross_entropy",
    "LrSchedule",
    "MissingGradientError",
    "adam_step",
    "lr_at",
    "make_adam",
    "load_checkpoint",
    "save_checkpoint",
]
