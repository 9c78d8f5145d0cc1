"""
models package

Hybrid CNN / dilated self-attention recognizer and the CNN authentication variant.
"""

from .config import ModelConfig
from .hybrid_model import (
    TrainedModel,
    build_classifier_head,
    build_cnn_branch,
    build_model,
    count_parameters,
    predict_proba,
)
from .auth_model import build_auth_model

__all__ = [
    "ModelConfig",
    "TrainedModel",
    "build_classifier_head",
    "build_cnn_branch",
    "build_model",
    "count_parameters",
    "predict_proba",
    "build_auth_model",
]
