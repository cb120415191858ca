from torch import nn as nn

from ..utils.registry import LOSS_REGISTRY
from .basic_loss import softmax_cross_entropy

_reduction_modes = ['none', 'mean', 'sum']


@LOSS_REGISTRY.register()
class DefendedLoss(nn.Module):
    """Masking-label objective L_correct + alpha * L_adversary.

    L_correct scores the user head (the secret qubit subset) against the true
    labels. L_adversary scores a weight-free softmax over the expectations of
    every qubit against the adversarial targets, which pushes the all-qubit
    readout away from the true label.

    Args:
        alpha (float): Weight of the adversarial term. Default: 1.0.
        reduction (str): 'none' | 'mean' | 'sum'. Default: 'mean'.
    """

    def __init__(self, alpha=1.0, reduction='mean'):
        super(DefendedLoss, self).__init__()
        if alpha < 0:
            raise ValueError(f'alpha must be >= 0, got {alpha}')
        if reduction not in _reduction_modes:
            raise ValueError(f'Unsupported reduction mode: {reduction}. Supported ones are: {_reduction_modes}')
        self.alpha = float(alpha)
        self.reduction = reduction

    def forward(self, user_logits, all_expvals, target, adv_target):
        """
        Args:
            user_logits (Tensor): of shape (B, K). User head logits.
            all_expvals (Tensor): of shape (B, n_qubits). Every qubit's expectation.
            target (Tensor): of shape (B, ). True labels.
            adv_target (Tensor): of shape (B, ). Adversarial targets.

        Returns:
            tuple[Tensor]: total, l_correct, l_adversary.
        """
        l_correct = softmax_cross_entropy(user_logits, target, reduction=self.reduction)
        l_adversary = softmax_cross_entropy(all_expvals, adv_target, reduction=self.reduction)
        return l_correct + self.alpha * l_adversary, l_correct, l_adversary
