import math
import torch
from dataclasses import dataclass, field

DTYPE = torch.complex128
REAL_DTYPE = torch.float64

PARAM_COUNTS = {'H': 0, 'RX': 1, 'RY': 1, 'RZ': 1, 'ROT': 3, 'CNOT': 0}
TARGET_COUNTS = {'H': 1, 'RX': 1, 'RY': 1, 'RZ': 1, 'ROT': 1, 'CNOT': 2}


@dataclass(frozen=True)
class GateOp:
    """One gate of a circuit.

    Args:
        kind (str): One of H, RX, RY, RZ, ROT, CNOT.
        targets (tuple[int]): Qubit indices. CNOT takes (control, target).
        params (tuple[float]): Angles in radians. ROT carries (phi, theta, omega),
            applied as RZ(phi), then RY(theta), then RZ(omega).
    """
    kind: str
    targets: tuple
    params: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in PARAM_COUNTS:
            raise ValueError(f'Unknown gate kind {self.kind}. Supported ones are: {list(PARAM_COUNTS)}')
        object.__setattr__(self, 'targets', tuple(int(t) for t in self.targets))
        object.__setattr__(self, 'params', tuple(float(p) for p in self.params))
        if len(self.params) != PARAM_COUNTS[self.kind]:
            raise ValueError(f'{self.kind} takes {PARAM_COUNTS[self.kind]} params, got {len(self.params)}')
        if len(self.targets) != TARGET_COUNTS[self.kind]:
            raise ValueError(f'{self.kind} acts on {TARGET_COUNTS[self.kind]} qubits, got {len(self.targets)}')
        if self.kind == 'CNOT' and self.targets[0] == self.targets[1]:
            raise ValueError(f'CNOT needs two distinct qubits, got {self.targets}')

    def check_qubits(self, n_qubits):
        for t in self.targets:
            if not 0 <= t < n_qubits:
                raise IndexError(f'{self.kind} references qubit {t}, register has {n_qubits} qubits')


def _as_angle(theta):
    return torch.as_tensor(theta, dtype=REAL_DTYPE)


def _stack2x2(a, b, c, d):
    return torch.stack([torch.stack([a, b], dim=-1), torch.stack([c, d], dim=-1)], dim=-2)


def h_matrix():
    s = 1 / math.sqrt(2)
    return torch.tensor([[s, s], [s, -s]], dtype=DTYPE)


def rx_matrix(theta):
    """RX for a tensor of angles of any shape; returns shape (*theta.shape, 2, 2)."""
    half = _as_angle(theta) / 2
    c = torch.cos(half).to(DTYPE)
    s = torch.sin(half).to(DTYPE)
    return _stack2x2(c, -1j * s, -1j * s, c)


def ry_matrix(theta):
    half = _as_angle(theta) / 2
    c = torch.cos(half).to(DTYPE)
    s = torch.sin(half).to(DTYPE)
    return _stack2x2(c, -s, s, c)


def rz_matrix(theta):
    half = _as_angle(theta) / 2
    ones = torch.ones_like(half)
    e_neg = torch.polar(ones, -half)
    e_pos = torch.polar(ones, half)
    zero = torch.zeros_like(e_neg)
    return _stack2x2(e_neg, zero, zero, e_pos)


def rot_matrix(phi, theta, omega):
    """RZ(omega) @ RY(theta) @ RZ(phi), broadcast over the angle shapes."""
    return rz_matrix(omega) @ ry_matrix(theta) @ rz_matrix(phi)


def gate_matrix(op):
    """2x2 matrix of a single-qubit GateOp."""
    if op.kind == 'H':
        return h_matrix()
    if op.kind == 'RX':
        return rx_matrix(op.params[0])
    if op.kind == 'RY':
        return ry_matrix(op.params[0])
    if op.kind == 'RZ':
        return rz_matrix(op.params[0])
    if op.kind == 'ROT':
        return rot_matrix(*op.params)
    raise ValueError(f'{op.kind} is not a single-qubit gate')
