import math
import pytest
import torch

from qleak.losses import build_loss, cross_entropy
from qleak.losses.basic_loss import CrossEntropyLoss
from qleak.losses.masking_loss import DefendedLoss


def test_cross_entropy():
    """Test loss: cross_entropy of one probability vector"""
    assert cross_entropy([0.25, 0.75], 1) == pytest.approx(-math.log(0.75))
    assert cross_entropy([1.0, 0.0], 1) == pytest.approx(-math.log(1e-12))
    assert cross_entropy([0.5, 0.5], 0) == pytest.approx(math.log(2))
    with pytest.raises(IndexError):
        cross_entropy([0.5, 0.5], 2)


def test_cross_entropy_loss():
    """Test loss: CrossEntropyLoss reductions"""
    logits = torch.tensor([[0.0, 0.0], [1.0, -1.0]], dtype=torch.float64)
    target = torch.tensor([0, 0])
    per_sample = CrossEntropyLoss(reduction='none')(logits, target)
    assert per_sample.shape == (2, )
    assert float(per_sample[0]) == pytest.approx(math.log(2))
    mean = CrossEntropyLoss(reduction='mean')(logits, target)
    assert float(mean) == pytest.approx(float(per_sample.mean()))
    total = CrossEntropyLoss(reduction='sum', loss_weight=2.0)(logits, target)
    assert float(total) == pytest.approx(2 * float(per_sample.sum()))

    with pytest.raises(ValueError):
        CrossEntropyLoss(reduction='unknown')
    with pytest.raises(IndexError):
        CrossEntropyLoss()(logits, torch.tensor([0, 2]))


def test_defended_loss():
    """Test loss: L_correct + alpha * L_adversary"""
    user_logits = torch.tensor([[0.9, -0.2, -0.5]], dtype=torch.float64)
    all_expvals = torch.tensor([[0.9, -0.2, -0.5, 0.4]], dtype=torch.float64)
    target = torch.tensor([0])
    adv = torch.tensor([3])
    total, l_correct, l_adv = DefendedLoss(alpha=0.5)(user_logits, all_expvals, target, adv)
    assert float(l_correct) == pytest.approx(float(CrossEntropyLoss()(user_logits, target)))
    assert float(l_adv) == pytest.approx(float(CrossEntropyLoss()(all_expvals, adv)))
    assert float(total) == pytest.approx(float(l_correct) + 0.5 * float(l_adv))

    # alpha = 0 is the undefended loss
    total, l_correct, _ = DefendedLoss(alpha=0.0)(user_logits, all_expvals, target, adv)
    assert float(total) == float(l_correct)

    with pytest.raises(ValueError):
        DefendedLoss(alpha=-1)


def test_build_loss():
    """Test registry: build_loss"""
    loss = build_loss({'type': 'DefendedLoss', 'alpha': 2.0})
    assert isinstance(loss, DefendedLoss)
    assert loss.alpha == 2.0
