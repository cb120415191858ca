import functools
import torch

PROB_FLOOR = 1e-12


def reduce_loss(loss, reduction):
    """Reduce loss as specified.

    Args:
        loss (Tensor): Per-sample loss tensor.
        reduction (str): Options are 'none', 'mean' and 'sum'.

    Returns:
        Tensor: Reduced loss tensor.
    """
    if reduction == 'none':
        return loss
    elif reduction == 'mean':
        return loss.mean()
    elif reduction == 'sum':
        return loss.sum()
    raise ValueError(f"Unsupported reduction mode: {reduction}. Supported ones are: ['none', 'mean', 'sum']")


def weight_reduce_loss(loss, weight=None, reduction='mean'):
    """Apply per-sample weight and reduce loss.

    Args:
        loss (Tensor): Per-sample loss of shape (B, ).
        weight (Tensor): Per-sample weights of shape (B, ). Default: None.
        reduction (str): Options are 'none', 'mean' and 'sum'. Default: 'mean'.

    Returns:
        Tensor: Loss values.
    """
    if weight is None:
        return reduce_loss(loss, reduction)
    assert weight.shape == loss.shape
    loss = loss * weight
    if reduction == 'mean':
        return loss.sum() / weight.sum()
    return reduce_loss(loss, reduction)


def weighted_loss(loss_func):
    """Create a weighted version of a given per-sample loss function.

    The decorated function gets the signature
    `loss_func(pred, target, weight=None, reduction='mean', **kwargs)`.
    """

    @functools.wraps(loss_func)
    def wrapper(pred, target, weight=None, reduction='mean', **kwargs):
        loss = loss_func(pred, target, **kwargs)
        return weight_reduce_loss(loss, weight, reduction)

    return wrapper


def check_targets(target, n_classes):
    target = torch.as_tensor(target, dtype=torch.long)
    if target.numel() and (int(target.min()) < 0 or int(target.max()) >= n_classes):
        raise IndexError(f'Labels must lie in [0, {n_classes}), got range '
                         f'[{int(target.min())}, {int(target.max())}]')
    return target
