# nnlib/checkpoint.py
"""
Versioned checkpoints: a torch.save container (architecture as data, parameters,
optimizer state, seed, training metadata) plus a human-readable JSON sidecar.
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional

import torch


CHECKPOINT_VERSION = 1


def save_checkpoint(
    path: Path,
    state_dict: Dict[str, torch.Tensor],
    config: Dict[str, Any],
    optimizer_state: Optional[Dict[str, Any]] = None,
    seed: Optional[int] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "version": CHECKPOINT_VERSION,
        "config": config,
        "state_dict": {k: v.detach().cpu() for k, v in state_dict.items()},
        "shapes": {k: list(v.shape) for k, v in state_dict.items()},
        "optimizer": optimizer_state,
        "seed": seed,
        "metadata": metadata or {},
    }
    torch.save(payload, path)

    sidecar = path.with_suffix(".json")
    with sidecar.open("w", encoding="utf-8") as f:
        json.dump(
            {
                "version": CHECKPOINT_VERSION,
                "config": config,
                "shapes": payload["shapes"],
                "seed": seed,
                "metadata": payload["metadata"],
            },
            f,
            indent=2,
            sort_keys=True,
        )
        f.write("\n")
    return path


def load_checkpoint(path: Path) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    payload = torch.load(path, map_location="cpu", weights_only=False)
    version = payload.get("version")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version!r} (expected {CHECKPOINT_VERSION})")
    for name, shape in payload["shapes"].items():
        actual = list(payload["state_dict"][name].shape)
        if actual != shape:
            raise ValueError(f"{path}: parameter {name} has shape {actual}, header says {shape}")
    return payload
