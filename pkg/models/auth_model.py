# models/auth_model.py
"""
User authentication network: the CNN block followed directly by a dense +
softmax classifier over subject ids (no attention or dilated stages).
"""

from typing import Dict, List

import torch
from torch import nn

from models.config import ModelConfig
from models.hybrid_model import BranchStack
from nnlib.layers import DenseSpec, SoftmaxSpec, build_layer, spec_to_dict


DEFAULT_N_SUBJECTS = 10


class AuthModel(nn.Module):
    kind = "authentication"

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.backbone = BranchStack(cfg)
        self.dense = build_layer(DenseSpec(cfg.n_classes), cfg.feature_dim * cfg.feature_len)
        self.softmax = build_layer(SoftmaxSpec(), cfg.n_classes)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.softmax(self.dense(self.backbone(x).flatten(1)))

    def layer_specs(self) -> Dict[str, List[dict]]:
        out = {name: [spec_to_dict(s) for s in br.specs] for name, br in self.backbone.branches.items()}
        out["classifier"] = [spec_to_dict(DenseSpec(self.cfg.n_classes)), spec_to_dict(SoftmaxSpec())]
        return out


def build_auth_model(cfg: ModelConfig) -> AuthModel:
    """`cfg.n_classes` is the number of enrolled subjects."""
    return AuthModel(cfg)
