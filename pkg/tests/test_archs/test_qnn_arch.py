import math
import pytest
import torch

from qleak.archs import build_network
from qleak.archs.qnn_arch import StronglyEntanglingQNN, build_ansatz, encode, entangler_range, shifted_params
from qleak.ops import expval_z, run
from qleak.ops.statevector import expval_z_batch
from qleak.utils import ConfigError


def test_encode():
    """Test encoding: H on every qubit then RZ(x_i)"""
    circuit = encode([0.1, 2.0, 3.0])
    assert circuit.n_qubits == 3
    assert circuit.count('H') == 3
    assert circuit.count('RZ') == 3
    assert [op.params[0] for op in circuit.ops if op.kind == 'RZ'] == [0.1, 2.0, 3.0]
    # RZ after H leaves Z expectations at zero
    state = run(circuit)
    for q in range(3):
        assert expval_z(state, q) == pytest.approx(0.0, abs=1e-12)

    with pytest.raises(ValueError):
        encode([0.1, 2 * math.pi])
    with pytest.raises(ValueError):
        encode([0.1, 0.2], n_qubits=3)


def test_ansatz_layout():
    """Test ansatz: ROT per qubit and a CNOT ring per layer"""
    assert [entangler_range(layer, 4) for layer in range(5)] == [1, 2, 3, 1, 2]
    circuit = build_ansatz(torch.zeros(2, 4, 3))
    assert circuit.count('ROT') == 8
    assert circuit.count('CNOT') == 8
    cnots = [op.targets for op in circuit.ops if op.kind == 'CNOT']
    assert cnots[:4] == [(0, 1), (1, 2), (2, 3), (3, 0)]
    assert cnots[4:] == [(0, 2), (1, 3), (2, 0), (3, 1)]
    assert build_ansatz(torch.zeros(3, 1, 3)).count('CNOT') == 0
    with pytest.raises(ValueError):
        build_ansatz(torch.zeros(2, 4))


@pytest.mark.parametrize('n_qubits,n_layers', [(1, 1), (2, 2), (3, 2), (4, 3)])
def test_batched_states_match_gate_by_gate(n_qubits, n_layers):
    """Test network: batched states equal the gate-by-gate simulation"""
    net = StronglyEntanglingQNN(n_qubits=n_qubits, n_layers=n_layers, n_classes=1, seed=n_qubits)
    g = torch.Generator().manual_seed(3)
    angles = torch.rand((5, n_qubits), generator=g, dtype=torch.float64) * 2 * math.pi
    states = net.states(angles)
    assert states.shape == (5, 1 << n_qubits)
    for b in range(5):
        reference = run(encode(angles[b]) + net.ansatz_circuit())
        assert torch.allclose(states[b], reference.amplitudes, atol=1e-12)


def test_states_over_parameter_sets():
    """Test network: one leading axis per parameter set"""
    net = StronglyEntanglingQNN(n_qubits=3, n_layers=2, n_classes=2, seed=1)
    angles = torch.rand((4, 3), dtype=torch.float64)
    stack = shifted_params(net.params.detach())
    assert stack.shape == (1 + 2 * net.n_params, 2, 3, 3)
    states = net.states(angles, stack)
    assert states.shape == (stack.shape[0], 4, 8)
    assert torch.allclose(states[0], net.states(angles), atol=1e-12)
    e = expval_z_batch(states, 3)
    assert e.shape == (stack.shape[0], 4, 3)


def test_init_and_heads():
    """Test network: seeded init in [0, 2pi) and both heads"""
    a = StronglyEntanglingQNN(n_qubits=4, n_layers=6, n_classes=3, seed=0)
    b = StronglyEntanglingQNN(n_qubits=4, n_layers=6, n_classes=3, seed=0)
    assert torch.equal(a.params, b.params)
    assert a.params.shape == (6, 4, 3)
    assert not a.params.requires_grad
    assert float(a.params.min()) >= 0 and float(a.params.max()) < 2 * math.pi
    assert a.n_params == 72

    expvals = torch.tensor([[0.9, -0.2, -0.5, 0.3]], dtype=torch.float64)
    assert torch.equal(a.user_logits(expvals), expvals[:, :3])
    assert a.head_parameters() == {}

    lin = StronglyEntanglingQNN(n_qubits=4, n_layers=1, n_classes=3, head_kind='linear', seed=0)
    assert lin.head_weight.shape == (3, 3)
    bound = 1 / math.sqrt(3)
    assert float(lin.head_weight.abs().max()) <= bound
    assert lin.user_logits(expvals).shape == (1, 3)
    assert set(lin.head_parameters()) == {'head_weight', 'head_bias'}


def test_invalid_configs():
    """Test network: option validation"""
    with pytest.raises(ConfigError):
        StronglyEntanglingQNN(n_qubits=2, n_layers=1, n_classes=3)
    with pytest.raises(ConfigError):
        StronglyEntanglingQNN(n_qubits=4, n_layers=1, n_classes=3, n_mask_classes=2)
    with pytest.raises(ConfigError):
        StronglyEntanglingQNN(n_qubits=4, n_layers=0, n_classes=3)
    with pytest.raises(ConfigError):
        StronglyEntanglingQNN(n_qubits=4, n_layers=1, n_classes=2, measured_qubits=[0, 0])
    with pytest.raises(ConfigError):
        StronglyEntanglingQNN(n_qubits=4, n_layers=1, n_classes=2, head_kind='mlp')


def test_build_network():
    """Test registry: build_network from options"""
    net = build_network({'type': 'StronglyEntanglingQNN', 'n_qubits': 2, 'n_layers': 1, 'n_classes': 2})
    assert isinstance(net, StronglyEntanglingQNN)
    with pytest.raises(KeyError):
        build_network({'type': 'NoSuchNet'})
