from .backend import QuantumBackend
from .gates import GateOp, gate_matrix, h_matrix, rot_matrix, rx_matrix, ry_matrix, rz_matrix
from .statevector import (MAX_QUBITS, Circuit, NoiseSpec, StateVector, apply_cnot, apply_gate, apply_single_qubit,
                          estimate_expval_z, expval_z, expval_z_batch, run, sample_counts, sample_expval_z_batch)

__all__ = [
    'QuantumBackend', 'GateOp', 'gate_matrix', 'h_matrix', 'rot_matrix', 'rx_matrix', 'ry_matrix', 'rz_matrix',
    'MAX_QUBITS', 'Circuit', 'NoiseSpec', 'StateVector', 'apply_cnot', 'apply_gate', 'apply_single_qubit',
    'estimate_expval_z', 'expval_z', 'expval_z_batch', 'run', 'sample_counts', 'sample_expval_z_batch'
]
