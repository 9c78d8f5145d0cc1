# models/hybrid_model.py
"""
Hybrid CNN / dilated self-attention activity classifier.

    window [B, 1, C, 80]
      -> per-channel standardization (training statistics)
      -> CNN branch per modality          [B, 128, 20]
      -> concatenate branches on features [B, D, 20]   (D = 128 or 256)
      -> four windows of 5 steps, each: self-attention -> 2 dilated convs
      -> windows re-joined on time        [B, 32, 20]
      -> flatten -> dense -> softmax      [B, n_classes]
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import torch
from torch import nn

from models.config import ModelConfig
from nnlib.checkpoint import load_checkpoint, save_checkpoint
from nnlib.layers import (
    AvgPool2dSpec,
    Conv2dSpec,
    DenseSpec,
    DepthwiseConv2dSpec,
    DilatedConv1dSpec,
    DropoutSpec,
    ELUSpec,
    LayerNormSpec,
    LayerShapeError,
    LayerSpec,
    MultiHeadSelfAttentionSpec,
    SelfAttention,
    SoftmaxSpec,
    build_layer,
    out_dim,
    spec_to_dict,
)


VALID_BRANCH_CHANNELS = (1, 6)


def branch_specs(cfg: ModelConfig, n_channels: int) -> List[LayerSpec]:
    return [
        Conv2dSpec(cfg.conv1_maps, cfg.conv1_kernel, padding="same"),
        LayerNormSpec(),
        ELUSpec(),
        DepthwiseConv2dSpec((n_channels, 1), cfg.depth_multiplier),
        LayerNormSpec(),
        ELUSpec(),
        AvgPool2dSpec((1, cfg.pool)),
        DropoutSpec(cfg.dropout),
        Conv2dSpec(cfg.conv3_filters, (1, cfg.conv3_kernel), padding="same"),
        LayerNormSpec(),
        ELUSpec(),
        AvgPool2dSpec((1, cfg.pool)),
        DropoutSpec(cfg.dropout),
    ]


def window_block_specs(cfg: ModelConfig, feature_dim: int) -> List[LayerSpec]:
    specs: List[LayerSpec] = [MultiHeadSelfAttentionSpec(cfg.heads, feature_dim)]
    for _ in range(cfg.dilated_layers):
        specs += [DilatedConv1dSpec(cfg.dilated_filters, cfg.dilated_kernel, cfg.dilation), ELUSpec()]
    return specs


class CNNBranch(nn.Module):
    """[B, 1, C, L] -> [B, conv3_filters, L / pool^2]"""

    def __init__(self, cfg: ModelConfig, n_channels: int):
        super().__init__()
        if n_channels not in VALID_BRANCH_CHANNELS:
            raise ValueError(f"CNN branch supports {VALID_BRANCH_CHANNELS} channels, got {n_channels}")
        self.n_channels = n_channels
        self.window_len = cfg.window_len
        self.specs = branch_specs(cfg, n_channels)
        layers, d = [], 1
        for spec in self.specs:
            layers.append(build_layer(spec, d))
            d = out_dim(spec, d)
        self.layers = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        expected = (1, self.n_channels, self.window_len)
        if x.dim() != 4 or tuple(x.shape[1:]) != expected:
            raise LayerShapeError(f"CNNBranch: expected [B, {', '.join(map(str, expected))}], got {tuple(x.shape)}")
        return self.layers(x).squeeze(2)


class WindowBlock(nn.Module):
    """Self-attention then dilated convolutions on one [N, steps, D] window."""

    def __init__(self, cfg: ModelConfig, feature_dim: int):
        super().__init__()
        specs = window_block_specs(cfg, feature_dim)
        self.attention: SelfAttention = build_layer(specs[0], feature_dim)
        convs, d = [], feature_dim
        for spec in specs[1:]:
            convs.append(build_layer(spec, d))
            d = out_dim(spec, d)
        self.dilated = nn.Sequential(*convs)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        a = self.attention(x)
        return self.dilated(a.transpose(1, 2))


class ClassifierHead(nn.Module):
    """Feature sequence [B, D, T] -> class probabilities [B, n_classes]."""

    def __init__(self, cfg: ModelConfig, feature_dim: int):
        super().__init__()
        self.n_windows = cfg.n_attention_windows
        self.feature_dim = feature_dim
        self.shared = cfg.share_window_weights
        n_blocks = 1 if self.shared else self.n_windows
        self.blocks = nn.ModuleList(WindowBlock(cfg, feature_dim) for _ in range(n_blocks))
        flat = cfg.dilated_filters * cfg.feature_len
        self.dense = build_layer(DenseSpec(cfg.n_classes), flat)
        self.softmax = build_layer(SoftmaxSpec(), cfg.n_classes)

    def window_features(self, feat: torch.Tensor) -> torch.Tensor:
        """Per-window attention + dilated conv, re-joined along time: [B, filters, T]."""
        if feat.dim() != 3 or feat.shape[1] != self.feature_dim:
            raise LayerShapeError(
                f"ClassifierHead: expected [B, {self.feature_dim}, T], got {tuple(feat.shape)}"
            )
        b, d, t = feat.shape
        if t % self.n_windows:
            raise LayerShapeError(f"ClassifierHead: time length {t} not divisible by {self.n_windows} windows")
        steps = t // self.n_windows
        windows = feat.reshape(b, d, self.n_windows, steps).permute(0, 2, 3, 1)  # [B, n, steps, D]

        if self.shared:
            y = self.blocks[0](windows.reshape(b * self.n_windows, steps, d))
            y = y.reshape(b, self.n_windows, -1, steps)
        else:
            y = torch.stack([blk(windows[:, k]) for k, blk in enumerate(self.blocks)], dim=1)
        return y.permute(0, 2, 1, 3).reshape(b, -1, t)

    def forward(self, feat: torch.Tensor) -> torch.Tensor:
        z = self.window_features(feat).flatten(1)
        return self.softmax(self.dense(z))


class ChannelScaler(nn.Module):
    """Per-channel standardization with statistics frozen from the training windows."""

    def __init__(self, n_channels: int):
        super().__init__()
        self.register_buffer("mean", torch.zeros(n_channels))
        self.register_buffer("scale", torch.ones(n_channels))

    @torch.no_grad()
    def fit(self, X: Union[np.ndarray, torch.Tensor]) -> "ChannelScaler":
        x = torch.as_tensor(np.asarray(X) if not isinstance(X, torch.Tensor) else X, dtype=torch.float64)
        if x.dim() == 4:
            x = x.squeeze(1)
        if x.dim() != 3 or x.shape[1] != len(self.mean):
            raise LayerShapeError(f"ChannelScaler: expected [n, {len(self.mean)}, L], got {tuple(x.shape)}")
        flat = x.transpose(0, 1).reshape(len(self.mean), -1)
        std = flat.std(dim=1, unbiased=False)
        self.mean.copy_(flat.mean(dim=1).to(self.mean.dtype))
        # constant channels pass through centered
        self.scale.copy_(torch.where(std > 1e-8, std, torch.ones_like(std)).to(self.scale.dtype))
        return self

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return (x - self.mean.view(1, 1, -1, 1)) / self.scale.view(1, 1, -1, 1)


class BranchStack(nn.Module):
    """Splits a [B, 1, C, L] window into per-modality branches and concatenates their features."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.layout = cfg.branches
        self.branches = nn.ModuleDict({name: CNNBranch(cfg, c) for name, c in self.layout})
        self.n_channels = sum(c for _, c in self.layout)
        self.scaler = ChannelScaler(self.n_channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() == 3:
            x = x.unsqueeze(1)
        if x.dim() != 4 or x.shape[2] != self.n_channels:
            raise LayerShapeError(
                f"model expects [B, 1, {self.n_channels}, L] windows, got {tuple(x.shape)}"
            )
        x = self.scaler(x)
        feats, c0 = [], 0
        for name, c in self.layout:
            feats.append(self.branches[name](x[:, :, c0: c0 + c]))
            c0 += c
        return torch.cat(feats, dim=1)


class HybridModel(nn.Module):
    kind = "recognition"

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.backbone = BranchStack(cfg)
        self.head = ClassifierHead(cfg, cfg.feature_dim)

    def features(self, x: torch.Tensor) -> torch.Tensor:
        return self.backbone(x)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.backbone(x))

    def layer_specs(self) -> Dict[str, List[dict]]:
        out = {name: [spec_to_dict(s) for s in br.specs] for name, br in self.backbone.branches.items()}
        out["window_block"] = [spec_to_dict(s) for s in window_block_specs(self.cfg, self.cfg.feature_dim)]
        out["classifier"] = [spec_to_dict(DenseSpec(self.cfg.n_classes)), spec_to_dict(SoftmaxSpec())]
        return out


def build_cnn_branch(cfg: ModelConfig, n_channels: int) -> CNNBranch:
    return CNNBranch(cfg, n_channels)


def build_classifier_head(cfg: ModelConfig, feature_dim: Optional[int] = None) -> ClassifierHead:
    return ClassifierHead(cfg, feature_dim if feature_dim is not None else cfg.feature_dim)


def build_model(cfg: ModelConfig) -> HybridModel:
    return HybridModel(cfg)


def count_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters() if p.requires_grad)


def predict_proba(
    model: nn.Module,
    X: Union[np.ndarray, torch.Tensor],
    batch_size: int = 1024,
) -> np.ndarray:
    """Eval-mode batched forward; X is [n, C, L] or [n, 1, C, L]."""
    dtype = next(model.parameters()).dtype
    X = torch.as_tensor(np.asarray(X) if not isinstance(X, torch.Tensor) else X, dtype=dtype)
    if X.dim() == 3:
        X = X.unsqueeze(1)
    was_training = model.training
    model.eval()
    out = []
    with torch.no_grad():
        for i in range(0, len(X), batch_size):
            out.append(model(X[i: i + batch_size]).cpu().numpy())
    model.train(was_training)
    if not out:
        return np.zeros((0, getattr(model, "cfg").n_classes))
    return np.concatenate(out)


# ----------------------------
# Trained model container
# ----------------------------

@dataclass
class TrainedModel:
    config: ModelConfig
    model: nn.Module
    fold: Optional[str] = None
    epochs_run: int = 0
    best_epoch: int = 0
    final_lr: float = 0.0
    seed: Optional[int] = None
    history: List[Dict[str, float]] = field(default_factory=list)

    @property
    def kind(self) -> str:
        return getattr(self.model, "kind", "recognition")

    def predict_proba(self, X: Union[np.ndarray, torch.Tensor], batch_size: int = 1024) -> np.ndarray:
        return predict_proba(self.model, X, batch_size)

    def predict(self, X: Union[np.ndarray, torch.Tensor], batch_size: int = 1024) -> np.ndarray:
        return self.predict_proba(X, batch_size).argmax(axis=1)

    def metadata(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "fold": self.fold,
            "epochs_run": self.epochs_run,
            "best_epoch": self.best_epoch,
            "final_lr": self.final_lr,
        }

    def save(self, path: Path, optimizer_state: Optional[Dict[str, Any]] = None) -> Path:
        config = {"kind": self.kind, **self.config.to_dict()}
        if hasattr(self.model, "layer_specs"):
            config["layers"] = self.model.layer_specs()
        return save_checkpoint(
            path,
            self.model.state_dict(),
            config,
            optimizer_state=optimizer_state,
            seed=self.seed,
            metadata=self.metadata(),
        )

    @classmethod
    def load(cls, path: Path) -> "TrainedModel":
        from models.auth_model import build_auth_model

        payload = load_checkpoint(path)
        raw = dict(payload["config"])
        kind = raw.pop("kind", "recognition")
        raw.pop("layers", None)
        cfg = ModelConfig.from_dict(raw)
        model = build_auth_model(cfg) if kind == "authentication" else build_model(cfg)
        model.load_state_dict(payload["state_dict"], strict=True)
        model.eval()
        meta = payload.get("metadata", {})
        return cls(
            config=cfg,
            model=model,
            fold=meta.get("fold"),
            epochs_run=int(meta.get("epochs_run", 0)),
            best_epoch=int(meta.get("best_epoch", 0)),
            final_lr=float(meta.get("final_lr", 0.0)),
            seed=payload.get("seed"),
        )
