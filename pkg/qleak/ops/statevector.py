"""Dense statevector simulation.

Qubit 0 is the least-significant bit of the basis-state index. Bitstrings are
printed most-significant qubit first, so qubit 0 is the last character.

The batched kernels (`apply_single_qubit`, `apply_cnot`, `expval_z_batch`,
`sample_expval_z_batch`) take states of shape (*batch, 2**n) and are what the
QNN training loop runs on. The single-state API (`apply_gate`, `run`,
`expval_z`, `sample_counts`) is a batch of one on top of them.
"""
import torch
from dataclasses import dataclass, field
from functools import lru_cache

from ..utils.errors import InvariantError
from .gates import DTYPE, REAL_DTYPE, GateOp, gate_matrix

MAX_QUBITS = 12
NORM_TOL = 1e-10
# upper bound on shots * qubits * rows held at once while sampling
_SAMPLE_CHUNK = 1 << 22


@dataclass(frozen=True)
class NoiseSpec:
    """Readout noise: every measured bit flips independently with `readout_flip_prob`."""
    readout_flip_prob: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.readout_flip_prob <= 1.0:
            raise ValueError(f'readout_flip_prob must be in [0, 1], got {self.readout_flip_prob}')

    @classmethod
    def from_opt(cls, opt):
        if opt is None:
            return cls()
        if isinstance(opt, NoiseSpec):
            return opt
        return cls(readout_flip_prob=float(opt.get('readout_flip_prob', 0.0)))


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    ops: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f'n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}')
        object.__setattr__(self, 'ops', tuple(self.ops))
        for op in self.ops:
            if not isinstance(op, GateOp):
                raise TypeError(f'Circuit ops must be GateOp, got {type(op).__name__}')
            op.check_qubits(self.n_qubits)

    def __add__(self, other):
        if self.n_qubits != other.n_qubits:
            raise ValueError(f'Cannot join circuits on {self.n_qubits} and {other.n_qubits} qubits')
        return Circuit(self.n_qubits, self.ops + other.ops)

    def __len__(self):
        return len(self.ops)

    def count(self, kind):
        return sum(op.kind == kind for op in self.ops)


@dataclass(frozen=True)
class StateVector:
    amplitudes: torch.Tensor

    def __post_init__(self):
        amps = torch.as_tensor(self.amplitudes, dtype=DTYPE).reshape(-1)
        dim = amps.numel()
        if dim < 2 or dim & (dim - 1):
            raise ValueError(f'State length must be a power of two >= 2, got {dim}')
        if dim > 1 << MAX_QUBITS:
            raise ValueError(f'At most {MAX_QUBITS} qubits are supported')
        norm = float(torch.sum(amps.real**2 + amps.imag**2))
        if abs(norm - 1.0) > NORM_TOL:
            raise InvariantError(f'State norm drifted to {norm!r}')
        object.__setattr__(self, 'amplitudes', amps)

    @classmethod
    def zero(cls, n_qubits):
        """|0...0> on n_qubits."""
        if not 1 <= n_qubits <= MAX_QUBITS:
            raise ValueError(f'n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}')
        amps = torch.zeros(1 << n_qubits, dtype=DTYPE)
        amps[0] = 1
        return cls(amps)

    @property
    def n_qubits(self):
        return self.amplitudes.numel().bit_length() - 1

    def probabilities(self):
        return self.amplitudes.real**2 + self.amplitudes.imag**2


# ---------------------------------------------------------------------------
# batched kernels
# ---------------------------------------------------------------------------


def apply_single_qubit(states, matrix, qubit, n_qubits):
    """Apply 2x2 matrices on `qubit`.

    Args:
        states (Tensor): Shape (*batch, 2**n_qubits).
        matrix (Tensor): Shape (*mbatch, 2, 2), broadcastable against batch.
        qubit (int): Target qubit.
        n_qubits (int): Register size.

    Returns:
        Tensor: Shape (*broadcast(batch, mbatch), 2**n_qubits).
    """
    batch_shape = states.shape[:-1]
    psi = states.reshape(*batch_shape, 1 << (n_qubits - 1 - qubit), 2, 1 << qubit)
    out = torch.matmul(matrix.unsqueeze(-3), psi)
    return out.reshape(*out.shape[:-3], 1 << n_qubits)


@lru_cache(maxsize=None)
def _cnot_permutation(control, target, n_qubits):
    idx = torch.arange(1 << n_qubits)
    flip = (idx >> control) & 1
    return idx ^ (flip << target)


def apply_cnot(states, control, target, n_qubits):
    return states[..., _cnot_permutation(control, target, n_qubits)]


@lru_cache(maxsize=None)
def _z_signs(n_qubits):
    idx = torch.arange(1 << n_qubits)
    bits = (idx.unsqueeze(0) >> torch.arange(n_qubits).unsqueeze(1)) & 1
    return (1 - 2 * bits).to(REAL_DTYPE)  # (n_qubits, 2**n_qubits)


def expval_z_batch(states, n_qubits):
    """Exact Pauli-Z expectation of every qubit, shape (*batch, n_qubits)."""
    probs = states.real**2 + states.imag**2
    return probs @ _z_signs(n_qubits).T


def _sample_indices(probs, shots, generator, flip_prob, n_qubits):
    """Draw basis indices (rows, shots) and apply independent readout flips."""
    probs = probs / probs.sum(dim=-1, keepdim=True)
    idx = torch.multinomial(probs, shots, replacement=True, generator=generator)
    if flip_prob > 0:
        flips = torch.rand((*idx.shape, n_qubits), generator=generator, dtype=REAL_DTYPE) < flip_prob
        weights = 1 << torch.arange(n_qubits)
        idx = idx ^ (flips.long() * weights).sum(dim=-1)
    return idx


def sample_expval_z_batch(states, n_qubits, shots, generator, flip_prob=0.0):
    """Shot-estimated Pauli-Z expectations, shape (*batch, n_qubits)."""
    batch_shape = states.shape[:-1]
    probs = (states.real**2 + states.imag**2).reshape(-1, 1 << n_qubits)
    rows = max(1, _SAMPLE_CHUNK // (shots * n_qubits))
    signs = _z_signs(n_qubits)
    out = []
    for start in range(0, probs.shape[0], rows):
        idx = _sample_indices(probs[start:start + rows], shots, generator, flip_prob, n_qubits)
        # (rows, shots, n_qubits) signs averaged over shots
        out.append(signs.T[idx].mean(dim=1))
    return torch.cat(out, dim=0).reshape(*batch_shape, n_qubits)


# ---------------------------------------------------------------------------
# single-state API
# ---------------------------------------------------------------------------


def apply_gate(state, op):
    """Return the state after applying `op`; the input state is not modified."""
    n_qubits = state.n_qubits
    op.check_qubits(n_qubits)
    amps = state.amplitudes
    if op.kind == 'CNOT':
        amps = apply_cnot(amps, op.targets[0], op.targets[1], n_qubits)
    else:
        amps = apply_single_qubit(amps, gate_matrix(op), op.targets[0], n_qubits)
    return StateVector(amps)


def run(circuit):
    """Apply every op of the circuit, in order, to |0...0>."""
    state = StateVector.zero(circuit.n_qubits)
    for op in circuit.ops:
        state = apply_gate(state, op)
    return state


def _check_qubit(qubit, n_qubits):
    if not 0 <= qubit < n_qubits:
        raise IndexError(f'Qubit {qubit} out of range for {n_qubits} qubits')


def expval_z(state, qubit):
    _check_qubit(qubit, state.n_qubits)
    return float(expval_z_batch(state.amplitudes, state.n_qubits)[qubit])


def sample_counts(state, shots, seed, noise=None):
    """Sample `shots` measurements of every qubit.

    Args:
        state (StateVector): State to measure.
        shots (int): Number of shots, at least 1.
        seed (int): Seed of the sampling generator.
        noise (NoiseSpec | None): Readout noise. Default: noiseless.

    Returns:
        dict[str, int]: Bitstring (qubit 0 last) to count, sorted by bitstring.
    """
    if shots < 1:
        raise ValueError(f'shots must be >= 1, got {shots}')
    noise = noise or NoiseSpec()
    n_qubits = state.n_qubits
    generator = torch.Generator().manual_seed(int(seed))
    idx = _sample_indices(state.probabilities().unsqueeze(0), shots, generator, noise.readout_flip_prob, n_qubits)
    counts = torch.bincount(idx.reshape(-1), minlength=1 << n_qubits)
    return {format(i, f'0{n_qubits}b'): int(c) for i, c in enumerate(counts.tolist()) if c > 0}


def estimate_expval_z(counts, qubit):
    """(N(+1) - N(-1)) / shots for one qubit, read from bitstring counts."""
    if not counts:
        raise ValueError('Cannot estimate an expectation from empty counts')
    n_qubits = len(next(iter(counts)))
    _check_qubit(qubit, n_qubits)
    shots = 0
    balance = 0
    for bitstring, count in counts.items():
        shots += count
        balance += count if bitstring[n_qubits - 1 - qubit] == '0' else -count
    if shots == 0:
        raise ValueError('Cannot estimate an expectation from zero shots')
    return balance / shots
