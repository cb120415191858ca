import torch
from collections import OrderedDict
from dataclasses import dataclass, field

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


@dataclass
class AdamState:
    """Moment estimates keyed by parameter name, plus the timestep."""
    step: int = 0
    exp_avg: dict = field(default_factory=OrderedDict)
    exp_avg_sq: dict = field(default_factory=OrderedDict)

    def to_dict(self):
        return {
            'step': self.step,
            'exp_avg': {k: v.tolist() for k, v in self.exp_avg.items()},
            'exp_avg_sq': {k: v.tolist() for k, v in self.exp_avg_sq.items()}
        }

    @classmethod
    def from_dict(cls, state):
        if state is None:
            return cls()

        def _tensors(d):
            return OrderedDict((k, torch.tensor(v, dtype=torch.float64)) for k, v in (d or {}).items())

        return cls(
            step=int(state['step']), exp_avg=_tensors(state['exp_avg']), exp_avg_sq=_tensors(state['exp_avg_sq']))


def adam_step(params, grads, state, lr, betas=(BETA1, BETA2), eps=EPS):
    """One bias-corrected Adam update.

    Inputs are left untouched; the caller swaps in the returned values.

    Args:
        params (dict[str, Tensor]): Current parameters.
        grads (dict[str, Tensor]): Gradients with the same keys and shapes.
        state (AdamState): Optimizer state before the step.
        lr (float): Learning rate.

    Returns:
        tuple[dict, AdamState]: Updated parameters and state.
    """
    beta1, beta2 = betas
    if set(params) != set(grads):
        raise ValueError(f'Parameter and gradient names differ: {sorted(params)} vs {sorted(grads)}')
    step = state.step + 1
    bc1 = 1.0 - beta1**step
    bc2 = 1.0 - beta2**step

    new_params = OrderedDict()
    new_state = AdamState(step=step)
    for k, p in params.items():
        g = grads[k]
        if g.shape != p.shape:
            raise ValueError(f'Gradient of {k} has shape {tuple(g.shape)}, parameter has {tuple(p.shape)}')
        m = state.exp_avg.get(k, torch.zeros_like(p))
        v = state.exp_avg_sq.get(k, torch.zeros_like(p))
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        new_params[k] = p - (lr / bc1) * m / (torch.sqrt(v / bc2) + eps)
        new_state.exp_avg[k] = m
        new_state.exp_avg_sq[k] = v
    return new_params, new_state
