import math
import pytest
import tempfile
import torch
import warnings
from os import path as osp

from qleak.models import build_model
from qleak.models.optim_util import AdamState, adam_step
from qleak.models.qnn_model import QNNModel, QnnConfig
from qleak.utils import ConfigError, DataError


def random_model(seed):
    g = torch.Generator().manual_seed(seed)
    n_qubits = 1 + seed % 4
    n_layers = 1 + seed % 3
    n_classes = max(1, n_qubits - (seed % 2))
    head_kind = 'linear' if seed % 3 == 0 else 'direct_softmax'
    defended = seed % 5 == 1 and n_qubits >= 2
    if defended:
        n_classes = n_qubits - 1
    config = QnnConfig(
        n_qubits=n_qubits,
        n_layers=n_layers,
        n_classes=n_classes,
        n_mask_classes=1 if defended else 0,
        alpha=0.7 if defended else 0.0,
        head_kind=head_kind,
        seed=seed)
    model = QNNModel(config)
    angles = torch.rand((3, n_qubits), generator=g, dtype=torch.float64) * 2 * math.pi
    batch = {'angles': angles, 'labels': torch.randint(n_classes, (3, ), generator=g)}
    if defended:
        batch['adv_targets'] = torch.full((3, ), n_classes, dtype=torch.long)
    return model, batch


def loss_at(model, batch, params):
    with torch.no_grad():
        loss, _ = model.batch_loss(model.expvals(batch['angles'], params), batch)
    return float(loss)


@pytest.mark.parametrize('seed', range(20))
def test_param_shift_matches_finite_differences(seed):
    """Test model: parameter-shift gradients equal central differences within 1e-6"""
    model, batch = random_model(seed)
    grads, loss_dict = model.param_shift_grad(batch)
    params = model.net.params.detach().clone()
    assert grads['params'].shape == params.shape
    assert loss_dict['l_total'] == pytest.approx(loss_at(model, batch, params), abs=1e-12)

    eps = 1e-4
    flat = params.reshape(-1)
    for p in range(flat.numel()):
        up = flat.clone()
        up[p] += eps
        down = flat.clone()
        down[p] -= eps
        fd = (loss_at(model, batch, up.reshape(params.shape)) - loss_at(model, batch, down.reshape(params.shape)))
        fd /= 2 * eps
        assert float(grads['params'].reshape(-1)[p]) == pytest.approx(fd, abs=1e-6)


def test_head_gradients():
    """Test model: the linear head gets autograd gradients"""
    model, batch = random_model(3)
    assert model.config.head_kind == 'linear'
    grads, _ = model.param_shift_grad(batch)
    assert set(grads) == {'params', 'head_weight', 'head_bias'}
    assert grads['head_weight'].shape == model.net.head_weight.shape
    assert float(grads['head_bias'].abs().sum()) > 0


def test_adam_step():
    """Test optimizer: bias-corrected Adam"""
    params = {'w': torch.tensor([1.0, -2.0], dtype=torch.float64)}
    grads = {'w': torch.tensor([0.5, -3.0], dtype=torch.float64)}
    new, state = adam_step(params, grads, AdamState(), lr=0.1)
    assert state.step == 1
    assert torch.allclose(new['w'], torch.tensor([0.9, -1.9], dtype=torch.float64), atol=1e-6)
    assert torch.equal(params['w'], torch.tensor([1.0, -2.0], dtype=torch.float64))

    # minimizes a quadratic
    p = {'w': torch.tensor([0.0], dtype=torch.float64)}
    state = AdamState()
    for _ in range(2000):
        p, state = adam_step(p, {'w': 2 * (p['w'] - 3)}, state, lr=0.05)
    assert float(p['w']) == pytest.approx(3.0, abs=1e-2)

    with pytest.raises(ValueError):
        adam_step(params, {'v': grads['w']}, AdamState(), lr=0.1)
    with pytest.raises(ValueError):
        adam_step(params, {'w': torch.zeros(3, dtype=torch.float64)}, AdamState(), lr=0.1)

    restored = AdamState.from_dict(state.to_dict())
    assert restored.step == state.step
    assert torch.equal(restored.exp_avg['w'], state.exp_avg['w'])


def test_training_is_deterministic():
    """Test model: same config and batch give identical updates"""
    a, batch = random_model(6)
    b, _ = random_model(6)
    for _ in range(3):
        a.optimize_parameters(batch)
        b.optimize_parameters(batch)
    assert torch.equal(a.net.params, b.net.params)
    assert a.optimizer_state.step == 3
    assert 'l_total' in a.get_current_log()


def test_loss_log_is_detached():
    """Test model: logged loss terms are plain floats, read without a grad warning"""
    model, batch = random_model(3)
    assert model.config.head_kind == 'linear'
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter('always')
        model.optimize_parameters(batch)
    assert not [w for w in caught if 'requires_grad' in str(w.message)]
    log = model.get_current_log()
    assert all(type(v) is float for v in log.values())


def test_forward_record():
    """Test model: one forward pass and what it exposes"""
    model = QNNModel(QnnConfig(n_qubits=3, n_layers=2, n_classes=3, seed=1))
    record = model.forward([0.1, 1.2, 4.0])
    assert len(record.expvals) == 3
    assert sum(record.user_probs) == pytest.approx(1.0, abs=1e-9)
    assert record.predicted_class == max(range(3), key=lambda c: record.user_probs[c])
    assert all(-1 <= e <= 1 for e in record.expvals)
    with pytest.raises(ValueError):
        model.forward([0.1, 1.2])
    with pytest.raises(ValueError):
        model.forward([0.1, 1.2, 7.0])


def test_defended_loss_matches_undefended_at_zero_alpha():
    """Test model: alpha = 0 reproduces the undefended loss"""
    defended = QNNModel(QnnConfig(n_qubits=4, n_layers=2, n_classes=3, n_mask_classes=1, alpha=0.0, seed=2))
    plain = QNNModel(QnnConfig(n_qubits=4, n_layers=2, n_classes=3, seed=2))
    x = [0.3, 1.0, 2.0, 5.5]
    expvals = plain.expvals(torch.tensor([x], dtype=torch.float64))
    expected = float(plain.batch_loss(expvals, {'labels': torch.tensor([1])})[0])
    assert defended.defended_loss(x, 1, 3) == pytest.approx(expected, abs=1e-12)
    with pytest.raises(ValueError):
        plain.defended_loss(x, 1, 3)


def test_config_validation():
    """Test config: invalid options raise ConfigError"""
    with pytest.raises(ConfigError):
        QnnConfig(n_qubits=4, n_layers=1, n_classes=3, alpha=1.0)
    with pytest.raises(ConfigError):
        QnnConfig(n_qubits=4, n_layers=1, n_classes=3, batch_size=0)
    with pytest.raises(ConfigError):
        QnnConfig(n_qubits=4, n_layers=1, n_classes=3, adversarial_target_scheme='random')
    with pytest.raises(ConfigError):
        QnnConfig.from_opt({'network_q': {'n_qubits': 4}, 'manual_seed': 0})

    config = QnnConfig.from_opt({
        'network_q': {'n_qubits': 4, 'n_layers': 6},
        'train': {'lr': 0.01, 'epochs': 3},
        'backend': {'shots': 100, 'readout_flip_prob': 0.02},
        'manual_seed': 5
    }, n_classes=3)
    assert config.measured_qubits == (0, 1, 2)
    assert config.noise.readout_flip_prob == 0.02
    assert config.n_params == 72
    assert config.network_opt()['type'] == 'StronglyEntanglingQNN'
    assert QnnConfig.from_dict(config.to_dict()) == config

    # network_q.type names a registered architecture
    with pytest.raises(ConfigError):
        QnnConfig.from_opt({
            'network_q': {'type': 'NoSuchQNN', 'n_qubits': 4, 'n_layers': 6},
            'manual_seed': 0
        }, n_classes=3)


def test_checkpoint_round_trip():
    """Test model: save and load a checkpoint"""
    model, batch = random_model(3)
    model.optimize_parameters(batch)
    with tempfile.TemporaryDirectory() as tmpdir:
        path = osp.join(tmpdir, 'model.yml')
        model.save(path)
        loaded = QNNModel.load(path)
        assert loaded.config == model.config
        assert torch.equal(loaded.net.params, model.net.params)
        assert torch.equal(loaded.net.head_weight, model.net.head_weight)
        assert loaded.optimizer_state.step == 1

        with open(path, 'w') as f:
            f.write('format_version: 99\n')
        with pytest.raises(DataError):
            QNNModel.load(path)
        with pytest.raises(DataError):
            QNNModel.load(osp.join(tmpdir, 'missing.yml'))


def test_build_model():
    """Test registry: build_model from options"""
    opt = {
        'model_type': 'QNNModel',
        'manual_seed': 0,
        'network_q': {'n_qubits': 2, 'n_layers': 1, 'n_classes': 2},
        'train': {'epochs': 1}
    }
    model = build_model(opt)
    assert isinstance(model, QNNModel)
    assert model.backend.analytic
