# nnlib/losses.py

import torch


LOG_CLAMP_EPS = 1e-7


def weighted_cross_entropy(
    probs: torch.Tensor,
    targets: torch.Tensor,
    weights: torch.Tensor,
    eps: float = LOG_CLAMP_EPS,
) -> torch.Tensor:
    """
    Sample-weighted categorical cross-entropy on softmax outputs:
    -sum_i w_i * log p_i[y_i] / sum_i w_i, with p clamped to [eps, 1].
    """
    if probs.dim() != 2:
        raise ValueError(f"probs must be [batch, classes], got {tuple(probs.shape)}")
    targets = targets.long().view(-1)
    weights = weights.to(probs.dtype).view(-1)
    if not (len(targets) == len(weights) == probs.shape[0]):
        raise ValueError(
            f"batch mismatch: probs {probs.shape[0]}, targets {len(targets)}, weights {len(weights)}"
        )
    if bool((weights < 0).any()):
        raise ValueError("sample weights must be >= 0")
    total = weights.sum()
    if float(total) <= 0.0:
        raise ValueError("total sample weight is zero")

    picked = probs.gather(1, targets.view(-1, 1)).squeeze(1).clamp(min=eps, max=1.0)
    return -(weights * torch.log(picked)).sum() / total
