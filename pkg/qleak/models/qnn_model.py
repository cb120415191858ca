import torch
from collections import OrderedDict
from dataclasses import asdict, dataclass, field, replace

from ..archs import build_network
from ..archs.qnn_arch import check_angles, shifted_params
from ..losses import build_loss
from ..ops import NoiseSpec, QuantumBackend
from ..ops.gates import REAL_DTYPE
from ..utils import ConfigError, InvariantError, get_root_logger
from ..utils.registry import ARCH_REGISTRY, MODEL_REGISTRY
from .base_model import BaseModel
from .optim_util import AdamState, adam_step

TARGET_SCHEMES = ('constant_mask_class', 'label_permutation')
PROB_TOL = 1e-9


@dataclass(frozen=True)
class QnnConfig:
    """Typed view of the victim (or clone) network and its training settings."""
    n_qubits: int
    n_layers: int
    n_classes: int
    n_mask_classes: int = 0
    measured_qubits: tuple = None
    head_kind: str = 'direct_softmax'
    shots: int = 0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    lr: float = 1e-3
    batch_size: int = 16
    epochs: int = 30
    alpha: float = 0.0
    seed: int = 0
    adversarial_target_scheme: str = 'constant_mask_class'
    shift_chunk: int = 64
    arch_type: str = 'StronglyEntanglingQNN'

    def __post_init__(self):
        if self.arch_type not in ARCH_REGISTRY:
            raise ConfigError(f'Unknown network_q.type {self.arch_type}. '
                              f'Supported ones are: {sorted(ARCH_REGISTRY.keys())}')
        if self.measured_qubits is None:
            object.__setattr__(self, 'measured_qubits', tuple(range(self.n_classes)))
        else:
            object.__setattr__(self, 'measured_qubits', tuple(int(q) for q in self.measured_qubits))
        if isinstance(self.noise, dict):
            object.__setattr__(self, 'noise', NoiseSpec.from_opt(self.noise))
        if self.batch_size < 1:
            raise ConfigError(f'train.batch_size must be >= 1, got {self.batch_size}')
        if self.epochs < 0:
            raise ConfigError(f'train.epochs must be >= 0, got {self.epochs}')
        if self.lr <= 0:
            raise ConfigError(f'train.lr must be > 0, got {self.lr}')
        if self.shots < 0:
            raise ConfigError(f'backend.shots must be >= 0, got {self.shots}')
        if self.shift_chunk < 1:
            raise ConfigError(f'backend.shift_chunk must be >= 1, got {self.shift_chunk}')
        if self.alpha < 0:
            raise ConfigError(f'alpha must be >= 0, got {self.alpha}')
        if self.n_mask_classes == 0 and self.alpha != 0:
            raise ConfigError('alpha only applies to defended training; set defense.n_mask_classes >= 1.')
        if self.adversarial_target_scheme not in TARGET_SCHEMES:
            raise ConfigError(f'Unknown adversarial_target_scheme {self.adversarial_target_scheme}. '
                              f'Supported ones are: {list(TARGET_SCHEMES)}')
        if len(self.measured_qubits) > self.n_qubits:
            raise ConfigError(f'Cannot measure {len(self.measured_qubits)} of {self.n_qubits} qubits')

    @property
    def defended(self):
        return self.n_mask_classes > 0

    @property
    def n_params(self):
        return self.n_layers * self.n_qubits * 3

    @classmethod
    def from_opt(cls, opt, n_classes=None):
        """Build from an option dict.

        Args:
            opt (dict): Options with `network_q`, `train`, `manual_seed` and
                optionally `backend`.
            n_classes (int | None): Class count of the loaded dataset. Overrides
                `network_q.n_classes` when given.
        """
        net_opt = opt.get('network_q') or {}
        train_opt = opt.get('train') or {}
        backend_opt = opt.get('backend') or {}
        try:
            return cls(
                n_qubits=int(net_opt['n_qubits']),
                n_layers=int(net_opt['n_layers']),
                n_classes=int(n_classes if n_classes is not None else net_opt['n_classes']),
                measured_qubits=net_opt.get('measured_qubits'),
                head_kind=net_opt.get('head_kind', 'direct_softmax'),
                shots=int(backend_opt.get('shots', 0)),
                noise=NoiseSpec.from_opt(backend_opt),
                lr=float(train_opt.get('lr', 1e-3)),
                batch_size=int(train_opt.get('batch_size', 16)),
                epochs=int(train_opt.get('epochs', 30)),
                seed=int(opt['manual_seed']),
                shift_chunk=int(backend_opt.get('shift_chunk', 64)),
                arch_type=net_opt.get('type', 'StronglyEntanglingQNN'))
        except ConfigError:
            raise
        except KeyError as e:
            raise ConfigError(f'Missing option {e} in network_q/train') from e
        except ValueError as e:
            raise ConfigError(f'Invalid network_q/train/backend option: {e}') from e

    def network_opt(self):
        return OrderedDict(
            type=self.arch_type,
            n_qubits=self.n_qubits,
            n_layers=self.n_layers,
            n_classes=self.n_classes,
            n_mask_classes=self.n_mask_classes,
            measured_qubits=list(self.measured_qubits),
            head_kind=self.head_kind,
            seed=self.seed)

    def to_dict(self):
        d = asdict(self)
        d['measured_qubits'] = list(self.measured_qubits)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d['noise'] = NoiseSpec.from_opt(d.get('noise'))
        return cls(**d)

    def replace(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class ForwardRecord:
    """What one forward pass produces, and what the cloud gets to see of it."""
    angles: tuple
    expvals: tuple
    user_probs: tuple
    predicted_class: int


@MODEL_REGISTRY.register()
class QNNModel(BaseModel):
    """Quantum classifier trained with parameter-shift gradients and Adam.

    Args:
        opt (dict | QnnConfig): Option dict or a ready config.
    """

    def __init__(self, opt):
        if isinstance(opt, QnnConfig):
            config = opt
            opt = OrderedDict()
        else:
            config = QnnConfig.from_opt(opt)
        super(QNNModel, self).__init__(opt)
        self.config = config

        self.net = build_network(config.network_opt())
        self.backend = QuantumBackend(config.shots, config.noise, seed=config.seed)
        if config.defended:
            self.cri = build_loss(OrderedDict(type='DefendedLoss', alpha=config.alpha))
        else:
            self.cri = build_loss(OrderedDict(type='CrossEntropyLoss'))
        self.optimizer_state = AdamState()

    # ------------------------------------------------------------------ #
    # evaluation
    # ------------------------------------------------------------------ #

    def expvals(self, angles, params=None):
        """Per-qubit expectations, shape (*P, B, n_qubits), via the backend."""
        states = self.net.states(angles, params)
        return self.backend.expvals(states, self.config.n_qubits)

    def _chunked_expvals(self, angles, param_sets):
        chunk = self.config.shift_chunk
        out = [self.expvals(angles, param_sets[i:i + chunk]) for i in range(0, param_sets.shape[0], chunk)]
        return torch.cat(out, dim=0)

    @torch.no_grad()
    def forward_batch(self, angles):
        """Evaluate a batch of encoded inputs.

        Returns:
            dict: `expvals` (B, n_qubits), `user_probs` (B, K) and
            `predicted` (B, ) with lowest-index tie-break.
        """
        angles = check_angles(angles, self.config.n_qubits)
        if angles.dim() == 1:
            angles = angles.unsqueeze(0)
        expvals = self.expvals(angles)
        probs = torch.softmax(self.net.user_logits(expvals), dim=-1)
        drift = (probs.sum(dim=-1) - 1).abs()
        if drift.numel() and float(drift.max()) > PROB_TOL:
            raise InvariantError(f'User probabilities do not sum to 1 (off by {float(drift.max())})')
        return OrderedDict(angles=angles, expvals=expvals, user_probs=probs, predicted=torch.argmax(probs, dim=-1))

    def records(self, angles):
        return self.records_from(self.forward_batch(angles))

    @staticmethod
    def records_from(out):
        """Split a `forward_batch` result into ForwardRecords."""
        return [
            ForwardRecord(
                angles=tuple(a), expvals=tuple(e), user_probs=tuple(p), predicted_class=int(c))
            for a, e, p, c in zip(out['angles'].tolist(), out['expvals'].tolist(), out['user_probs'].tolist(),
                                  out['predicted'].tolist())
        ]

    def forward(self, features):
        """One-sample forward pass."""
        return self.records(torch.as_tensor(features, dtype=REAL_DTYPE).reshape(1, -1))[0]

    @torch.no_grad()
    def accuracy(self, angles, labels):
        if len(labels) == 0:
            return None
        predicted = self.forward_batch(angles)['predicted']
        return float((predicted == torch.as_tensor(labels)).double().mean())

    # ------------------------------------------------------------------ #
    # losses and gradients
    # ------------------------------------------------------------------ #

    def batch_loss(self, expvals, batch):
        """Training loss of a batch from its per-qubit expectations.

        Returns:
            tuple: total loss tensor and an OrderedDict of its terms.
        """
        loss_dict = OrderedDict()
        user_logits = self.net.user_logits(expvals)
        if self.config.defended:
            l_total, l_correct, l_adv = self.cri(user_logits, expvals, batch['labels'], batch['adv_targets'])
            loss_dict['l_correct'] = l_correct
            loss_dict['l_adv'] = l_adv
        else:
            l_total = self.cri(user_logits, batch['labels'])
        loss_dict['l_total'] = l_total
        return l_total, loss_dict

    def defended_loss(self, features, true_label, adv_label):
        """L_correct + alpha * L_adversary of one sample."""
        if not self.config.defended:
            raise ValueError('defended_loss needs a defended model (n_mask_classes >= 1).')
        angles = check_angles(torch.as_tensor(features, dtype=REAL_DTYPE).reshape(1, -1), self.config.n_qubits)
        batch = {'labels': torch.tensor([int(true_label)]), 'adv_targets': torch.tensor([int(adv_label)])}
        with torch.no_grad():
            l_total, _ = self.batch_loss(self.expvals(angles), batch)
        return float(l_total)

    def param_shift_grad(self, batch, loss_fn=None):
        """Gradient of the batch loss.

        Quantum parameters use the parameter-shift rule: every expectation is
        evaluated at each coordinate shifted by +pi/2 and -pi/2 and
        dE/dtheta = (E+ - E-) / 2. The classical part of the loss, head
        included, is differentiated by autograd at the unshifted expectations.

        Args:
            batch (dict): `angles` (B, n_qubits), `labels` (B, ) and, when
                defended, `adv_targets` (B, ).
            loss_fn (callable | None): Maps (expvals, batch) to a scalar tensor
                or to (scalar, loss_dict). Default: `batch_loss`.

        Returns:
            tuple: OrderedDict of gradients keyed like `named_trainables`, and
            the OrderedDict of loss terms at the unshifted point.
        """
        loss_fn = loss_fn or self.batch_loss
        params = self.net.params.detach()
        n_params = params.numel()
        param_sets = shifted_params(params)
        with torch.no_grad():
            energies = self._chunked_expvals(batch['angles'], param_sets)  # (1 + 2P, B, n)

        head = self.net.head_parameters()
        for p in head.values():
            p.grad = None
        e0 = energies[0].clone().requires_grad_(True)
        out = loss_fn(e0, batch)
        loss, loss_dict = out if isinstance(out, tuple) else (out, OrderedDict(l_total=out))
        if torch.is_tensor(loss) and loss.requires_grad:
            loss.backward()

        grad_e0 = e0.grad if e0.grad is not None else torch.zeros_like(e0)
        jac = (energies[1:n_params + 1] - energies[n_params + 1:]) / 2
        grads = OrderedDict(params=torch.einsum('pbq,bq->p', jac, grad_e0).reshape(params.shape))
        for name, p in head.items():
            grads[name] = p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p)
        loss_dict = OrderedDict(
            (k, float(v.detach()) if torch.is_tensor(v) else float(v)) for k, v in loss_dict.items())
        return grads, loss_dict

    def named_trainables(self):
        named = OrderedDict(params=self.net.params.detach())
        for name, p in self.net.head_parameters().items():
            named[name] = p.detach()
        return named

    def optimize_parameters(self, batch):
        grads, self.log_dict = self.param_shift_grad(batch)
        new_params, self.optimizer_state = adam_step(self.named_trainables(), grads, self.optimizer_state,
                                                     self.config.lr)
        self._assign(new_params)

    def _assign(self, values):
        with torch.no_grad():
            self.net.params.copy_(values['params'])
            for name, p in self.net.head_parameters().items():
                p.copy_(values[name])

    def get_current_learning_rate(self):
        return [self.config.lr]

    # ------------------------------------------------------------------ #
    # checkpoints
    # ------------------------------------------------------------------ #

    def save(self, save_path):
        head = None
        if self.config.head_kind == 'linear':
            head = OrderedDict(weight=self.net.head_weight.detach().tolist(), bias=self.net.head_bias.detach().tolist())
        payload = OrderedDict(
            config=self.config.to_dict(),
            quantum_params=self.net.params.detach().tolist(),
            head=head,
            optimizer=self.optimizer_state.to_dict())
        self.save_checkpoint(payload, save_path)

    @classmethod
    def load(cls, load_path):
        """Rebuild a model, optimizer state included, from a checkpoint."""
        reader = BaseModel(OrderedDict())
        doc = reader.load_checkpoint(load_path)
        model = cls(QnnConfig.from_dict(doc['config']))
        values = OrderedDict(params=torch.tensor(doc['quantum_params'], dtype=REAL_DTYPE))
        if doc.get('head') is not None:
            values['head_weight'] = torch.tensor(doc['head']['weight'], dtype=REAL_DTYPE)
            values['head_bias'] = torch.tensor(doc['head']['bias'], dtype=REAL_DTYPE)
        if values['params'].shape != model.net.params.shape:
            raise InvariantError(f'Checkpoint params have shape {tuple(values["params"].shape)}, '
                                 f'expected {tuple(model.net.params.shape)}')
        model._assign(values)
        model.optimizer_state = AdamState.from_dict(doc.get('optimizer'))
        get_root_logger().info(f'Loaded {cls.__name__} with {model.config.n_params} quantum parameters.')
        return model
