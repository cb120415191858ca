import math
import torch
from torch import nn as nn

from ..ops.gates import DTYPE, REAL_DTYPE, GateOp, h_matrix, rot_matrix, rz_matrix
from ..ops.statevector import MAX_QUBITS, Circuit, apply_cnot, apply_single_qubit
from ..utils.errors import ConfigError
from ..utils.registry import ARCH_REGISTRY

TWO_PI = 2 * math.pi
HEAD_KINDS = ('direct_softmax', 'linear')


def entangler_range(layer, n_qubits):
    """CNOT offset r of one strongly entangling layer."""
    return layer % (n_qubits - 1) + 1


def check_angles(features, n_qubits):
    features = torch.as_tensor(features, dtype=REAL_DTYPE)
    if features.shape[-1] != n_qubits:
        raise ValueError(f'Expected {n_qubits} features (one per qubit), got {features.shape[-1]}')
    if bool(((features < 0) | (features >= TWO_PI)).any()):
        raise ValueError('Encoded features must lie in [0, 2*pi); scale the dataset first.')
    return features


def encode(features, n_qubits=None):
    """State-preparation circuit: H on every qubit, then RZ(x_i) on qubit i."""
    features = torch.as_tensor(features, dtype=REAL_DTYPE).reshape(-1)
    features = check_angles(features, features.numel() if n_qubits is None else n_qubits)
    n_qubits = features.numel()
    ops = [GateOp('H', (q, )) for q in range(n_qubits)]
    ops += [GateOp('RZ', (q, ), (float(x), )) for q, x in enumerate(features.tolist())]
    return Circuit(n_qubits, ops)


def build_ansatz(params):
    """Strongly entangling layers for params of shape (n_layers, n_qubits, 3)."""
    params = torch.as_tensor(params, dtype=REAL_DTYPE)
    if params.dim() != 3 or params.shape[-1] != 3:
        raise ValueError(f'Ansatz params must have shape (n_layers, n_qubits, 3), got {tuple(params.shape)}')
    n_layers, n_qubits, _ = params.shape
    ops = []
    for layer in range(n_layers):
        for q in range(n_qubits):
            ops.append(GateOp('ROT', (q, ), params[layer, q].tolist()))
        if n_qubits > 1:
            r = entangler_range(layer, n_qubits)
            ops += [GateOp('CNOT', (q, (q + r) % n_qubits)) for q in range(n_qubits)]
    return Circuit(n_qubits, ops)


@ARCH_REGISTRY.register()
class StronglyEntanglingQNN(nn.Module):
    """Angle-encoded variational classifier with a strongly entangling ansatz.

    The quantum parameters are trained with the parameter-shift rule, so they
    do not take part in autograd. The linear head does.

    Args:
        n_qubits (int): Register size, one feature per qubit. Default: 4.
        n_layers (int): Number of strongly entangling layers. Default: 6.
        n_classes (int): True classes C. Default: 3.
        n_mask_classes (int): Masking classes m. Default: 0.
        measured_qubits (list[int] | None): User qubit subset S. Default: the
            first C qubits.
        head_kind (str): 'direct_softmax' or 'linear'. Default: 'direct_softmax'.
        seed (int): Seed of the parameter initialization. Default: 0.
    """

    def __init__(self,
                 n_qubits=4,
                 n_layers=6,
                 n_classes=3,
                 n_mask_classes=0,
                 measured_qubits=None,
                 head_kind='direct_softmax',
                 seed=0):
        super(StronglyEntanglingQNN, self).__init__()
        if measured_qubits is None:
            measured_qubits = list(range(n_classes))
        self.n_qubits = int(n_qubits)
        self.n_layers = int(n_layers)
        self.n_classes = int(n_classes)
        self.n_mask_classes = int(n_mask_classes)
        self.measured_qubits = [int(q) for q in measured_qubits]
        self.head_kind = head_kind
        self._check()

        generator = torch.Generator().manual_seed(int(seed))
        init = torch.rand((self.n_layers, self.n_qubits, 3), generator=generator, dtype=REAL_DTYPE) * TWO_PI
        self.params = nn.Parameter(init, requires_grad=False)
        if head_kind == 'linear':
            bound = 1 / math.sqrt(len(self.measured_qubits))
            shape = (self.n_outputs, len(self.measured_qubits))
            weight = (torch.rand(shape, generator=generator, dtype=REAL_DTYPE) * 2 - 1) * bound
            bias = (torch.rand(self.n_outputs, generator=generator, dtype=REAL_DTYPE) * 2 - 1) * bound
            self.head_weight = nn.Parameter(weight)
            self.head_bias = nn.Parameter(bias)
        else:
            self.head_weight = None
            self.head_bias = None
        self.register_buffer('_subset', torch.tensor(self.measured_qubits, dtype=torch.long), persistent=False)

    def _check(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ConfigError(f'n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}')
        if self.n_layers < 1:
            raise ConfigError(f'n_layers must be >= 1, got {self.n_layers}')
        if self.n_classes < 1 or self.n_mask_classes < 0:
            raise ConfigError('n_classes must be >= 1 and n_mask_classes >= 0.')
        if self.head_kind not in HEAD_KINDS:
            raise ConfigError(f'Unknown head_kind {self.head_kind}. Supported ones are: {list(HEAD_KINDS)}')
        subset = self.measured_qubits
        if not subset or len(set(subset)) != len(subset) or any(not 0 <= q < self.n_qubits for q in subset):
            raise ConfigError(f'measured_qubits must be distinct indices in [0, {self.n_qubits}), got {subset}')
        if self.head_kind == 'direct_softmax':
            if len(subset) < self.n_classes:
                raise ConfigError(f'A direct_softmax head needs at least C={self.n_classes} measured qubits, '
                                  f'got {len(subset)}')
            if self.n_classes + self.n_mask_classes > self.n_qubits:
                raise ConfigError(f'{self.n_classes} classes plus {self.n_mask_classes} masking classes '
                                  f'do not fit on {self.n_qubits} qubits with a direct_softmax head')

    @property
    def n_params(self):
        return self.n_layers * self.n_qubits * 3

    @property
    def n_outputs(self):
        """Number of classes the user head scores."""
        if self.head_kind == 'linear':
            return self.n_classes + self.n_mask_classes
        return len(self.measured_qubits)

    def encode_circuit(self, features):
        return encode(features, self.n_qubits)

    def ansatz_circuit(self):
        return build_ansatz(self.params.detach())

    def states(self, angles, params=None):
        """Final states for a batch of inputs and optionally a batch of parameter sets.

        Args:
            angles (Tensor): Encoded features, shape (B, n_qubits).
            params (Tensor | None): Shape (*P, n_layers, n_qubits, 3). Default:
                the model's own parameters.

        Returns:
            Tensor: Complex states, shape (*P, B, 2**n_qubits).
        """
        n = self.n_qubits
        params = self.params.detach() if params is None else params
        angles = torch.as_tensor(angles, dtype=REAL_DTYPE)
        states = torch.zeros((angles.shape[0], 1 << n), dtype=DTYPE)
        states[:, 0] = 1
        hadamard = h_matrix()
        for q in range(n):
            states = apply_single_qubit(states, hadamard, q, n)
        for q in range(n):
            states = apply_single_qubit(states, rz_matrix(angles[:, q]), q, n)

        rot = rot_matrix(params[..., 0], params[..., 1], params[..., 2])  # (*P, L, n, 2, 2)
        for layer in range(self.n_layers):
            for q in range(n):
                # one matrix per parameter set, shared across the input batch
                states = apply_single_qubit(states, rot[..., layer, q, :, :].unsqueeze(-3), q, n)
            if n > 1:
                r = entangler_range(layer, n)
                for q in range(n):
                    states = apply_cnot(states, q, (q + r) % n, n)
        return states

    def user_logits(self, expvals):
        """Logits of the user head, read from the measured subset only."""
        view = expvals.index_select(-1, self._subset)
        if self.head_kind == 'linear':
            return view @ self.head_weight.T + self.head_bias
        return view

    def forward(self, expvals):
        return self.user_logits(expvals)

    def head_parameters(self):
        if self.head_kind == 'linear':
            return {'head_weight': self.head_weight, 'head_bias': self.head_bias}
        return {}


def shifted_params(params, shift=math.pi / 2):
    """Stack params with every coordinate shifted by +shift, then by -shift.

    Returns:
        Tensor: Shape (1 + 2P, *params.shape). Row 0 is unshifted, rows 1..P
        shift coordinate p-1 up, rows P+1..2P shift it down.
    """
    flat = params.reshape(-1)
    n_params = flat.numel()
    eye = torch.eye(n_params, dtype=flat.dtype) * shift
    stacked = torch.cat([flat.unsqueeze(0), flat + eye, flat - eye], dim=0)
    return stacked.reshape(1 + 2 * n_params, *params.shape)
