import math
import torch
from torch import nn as nn

from ..utils.registry import LOSS_REGISTRY
from .loss_util import PROB_FLOOR, check_targets, weighted_loss

_reduction_modes = ['none', 'mean', 'sum']


def cross_entropy(probs, label):
    """-log(probs[label]) for one probability vector, with a 1e-12 floor."""
    probs = torch.as_tensor(probs, dtype=torch.float64).reshape(-1)
    label = int(label)
    if not 0 <= label < probs.numel():
        raise IndexError(f'Label {label} out of range for {probs.numel()} classes')
    return -math.log(max(float(probs[label]), PROB_FLOOR))


@weighted_loss
def softmax_cross_entropy(logits, target):
    """Per-sample cross-entropy of softmax(logits) against integer targets."""
    target = check_targets(target, logits.shape[-1])
    probs = torch.softmax(logits, dim=-1)
    picked = probs.gather(-1, target.unsqueeze(-1)).squeeze(-1)
    return -torch.log(picked.clamp_min(PROB_FLOOR))


@LOSS_REGISTRY.register()
class CrossEntropyLoss(nn.Module):
    """Softmax cross-entropy over head logits.

    Args:
        loss_weight (float): Loss weight. Default: 1.0.
        reduction (str): Specifies the reduction to apply to the output.
            Supported choices are 'none' | 'mean' | 'sum'. Default: 'mean'.
    """

    def __init__(self, loss_weight=1.0, reduction='mean'):
        super(CrossEntropyLoss, self).__init__()
        if reduction not in _reduction_modes:
            raise ValueError(f'Unsupported reduction mode: {reduction}. Supported ones are: {_reduction_modes}')

        self.loss_weight = loss_weight
        self.reduction = reduction

    def forward(self, logits, target, weight=None, **kwargs):
        """
        Args:
            logits (Tensor): of shape (B, K). Head logits.
            target (Tensor): of shape (B, ). Class indices in [0, K).
            weight (Tensor, optional): of shape (B, ). Per-sample weights. Default: None.
        """
        return self.loss_weight * softmax_cross_entropy(logits, target, weight, reduction=self.reduction)
