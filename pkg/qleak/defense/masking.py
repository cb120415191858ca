"""Masking-label defense.

The defended victim gets m extra output classes and is trained so that only
its secret qubit subset S reads out the true label, while a weight-free
softmax over every qubit is pushed towards an adversarial target.
"""
import itertools
import numpy as np
from collections import OrderedDict
from dataclasses import dataclass, field

from ..adversary.extract import extract
from ..adversary.vote import group_points
from ..metrics import calculate_label_accuracy
from ..utils import ConfigError, DataError, get_root_logger

TARGET_SCHEMES = ('constant_mask_class', 'label_permutation')
HEURISTICS = ('majority', 'weighted_linear', 'weighted_exp')


@dataclass(frozen=True)
class DefenseConfig:
    """
    Args:
        n_mask_classes (int): Masking classes m. Default: 1.
        user_qubits (tuple | None): Secret subset S. Default: the victim's
            measured qubits (the first C).
        alpha (float): Weight of the adversarial loss term. Default: 1.0.
        adversarial_target_scheme (str): 'constant_mask_class' or
            'label_permutation'. Default: 'constant_mask_class'.
    """
    n_mask_classes: int = 1
    user_qubits: tuple = None
    alpha: float = 1.0
    adversarial_target_scheme: str = 'constant_mask_class'

    def __post_init__(self):
        if self.n_mask_classes < 1:
            raise ConfigError(f'defense.n_mask_classes must be >= 1, got {self.n_mask_classes}')
        if self.alpha < 0:
            raise ConfigError(f'defense.alpha must be >= 0, got {self.alpha}')
        if self.adversarial_target_scheme not in TARGET_SCHEMES:
            raise ConfigError(f'Unknown adversarial_target_scheme {self.adversarial_target_scheme}. '
                              f'Supported ones are: {list(TARGET_SCHEMES)}')
        if self.user_qubits is not None:
            object.__setattr__(self, 'user_qubits', tuple(int(q) for q in self.user_qubits))

    @classmethod
    def from_opt(cls, opt):
        if opt is None:
            raise ConfigError('This command needs a defense section in the option file.')
        return cls(
            n_mask_classes=int(opt.get('n_mask_classes', 1)),
            user_qubits=opt.get('user_qubits'),
            alpha=float(opt.get('alpha', 1.0)),
            adversarial_target_scheme=opt.get('adversarial_target_scheme', 'constant_mask_class'))


def make_defended_config(base, defense):
    """QnnConfig of the defended victim: C + m classes, head reading only S.

    Every qubit's expectation still goes to the cloud.
    """
    if base.defended:
        raise ConfigError('make_defended_config expects an undefended base config')
    subset = defense.user_qubits if defense.user_qubits is not None else base.measured_qubits
    if len(subset) >= base.n_qubits:
        raise ConfigError(f'The user subset {list(subset)} covers all {base.n_qubits} qubits; '
                          'the all-qubit view would equal the user view')
    if base.head_kind == 'direct_softmax' and base.n_classes + defense.n_mask_classes > base.n_qubits:
        raise ConfigError(f'{base.n_classes} classes plus {defense.n_mask_classes} masking classes need more than '
                          f'{base.n_qubits} qubits with a direct_softmax head')
    return base.replace(
        n_mask_classes=defense.n_mask_classes,
        measured_qubits=tuple(subset),
        alpha=defense.alpha,
        adversarial_target_scheme=defense.adversarial_target_scheme)


def assign_adversarial_targets(labels, scheme, n_classes, n_mask_classes):
    """Target of the adversarial loss term for every label; never the label itself.

    constant_mask_class sends every sample to class C, label_permutation sends
    label y to (y + 1) mod (C + m).
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f'Labels must lie in [0, {n_classes})')
    if scheme == 'constant_mask_class':
        if n_mask_classes < 1:
            raise ValueError('constant_mask_class needs at least one masking class')
        return np.full(labels.shape, n_classes, dtype=np.int64)
    if scheme == 'label_permutation':
        if n_classes + n_mask_classes < 2:
            raise ValueError('label_permutation needs at least two classes in total')
        return (labels + 1) % (n_classes + n_mask_classes)
    raise ValueError(f'Unknown adversarial_target_scheme {scheme}. Supported ones are: {list(TARGET_SCHEMES)}')


@dataclass
class DefenseRun:
    """What one victim run leaves behind for the defense comparison.

    Args:
        log (EpochLogStore): The cloud's epoch log.
        train_acc (list[float]): Per-epoch train accuracy of the user.
        gt_angles (ndarray): Ground-truth train angles.
        gt_labels (ndarray): Ground-truth train labels.
        user_qubits (tuple): The subset the user head reads.
    """
    log: object
    train_acc: list
    gt_angles: np.ndarray
    gt_labels: np.ndarray
    user_qubits: tuple


@dataclass
class DefenseReport:
    alpha: float
    n_mask_classes: int
    adversary_acc: dict = field(default_factory=OrderedDict)
    subset_acc: dict = field(default_factory=OrderedDict)
    user_acc_defended: float = None
    user_acc_baseline: float = None
    user_acc_delta: float = None
    overhead_epochs: int = None
    train_acc_curves: dict = field(default_factory=OrderedDict)

    def to_dict(self):
        return {
            'alpha': self.alpha,
            'n_mask_classes': self.n_mask_classes,
            'adversary_acc': self.adversary_acc,
            'subset_acc': self.subset_acc,
            'user_acc_defended': self.user_acc_defended,
            'user_acc_baseline': self.user_acc_baseline,
            'user_acc_delta': self.user_acc_delta,
            'overhead_epochs': self.overhead_epochs,
            'train_acc_curves': self.train_acc_curves
        }


def _extraction_accuracy(run, heuristic, assumed_qubits=None):
    extracted = extract(run.log, heuristic, assumed_qubits=assumed_qubits, view='expvals')
    return calculate_label_accuracy(extracted.angles, extracted.labels, run.gt_angles, run.gt_labels)


def user_accuracy(run):
    """User-head accuracy on the last logged epoch, read from the same records the cloud saw."""
    histories = group_points(run.log.epoch_slice(run.log.last_epoch), view='class_probs')
    angles = np.asarray([h.angles for h in histories], dtype=np.float64)
    labels = np.asarray([h.guesses[0][1] for h in histories], dtype=np.int64)
    return calculate_label_accuracy(angles, labels, run.gt_angles, run.gt_labels)


def overhead_epochs(defended_curve, baseline_curve):
    """Extra epochs the defended run needs to reach the baseline's final train accuracy.

    Returns None when the defended run never gets there.
    """
    if not defended_curve or not baseline_curve:
        return None
    target = baseline_curve[-1]
    first_def = next((e for e, acc in enumerate(defended_curve, start=1) if acc >= target), None)
    if first_def is None:
        return None
    first_base = next(e for e, acc in enumerate(baseline_curve, start=1) if acc >= target)
    return max(0, first_def - first_base)


def evaluate_defense(defended, baseline, alpha=None, n_mask_classes=None):
    """Compare the attack on a defended run against an undefended baseline.

    The adversary reads every qubit and votes with each heuristic on both logs.
    Per-subset accuracies use the exponential vote on every qubit subset of the
    user's subset size.

    Args:
        defended (DefenseRun): Defended victim run.
        baseline (DefenseRun): Undefended victim run.
        alpha (float | None): Recorded in the report.
        n_mask_classes (int | None): Recorded in the report.

    Returns:
        DefenseReport
    """
    for name, run in (('defended', defended), ('baseline', baseline)):
        if run.log is None or len(run.log) == 0:
            raise DataError(f'The {name} run has no epoch log to evaluate')
    logger = get_root_logger()
    report = DefenseReport(alpha=alpha, n_mask_classes=n_mask_classes)
    for heuristic in HEURISTICS:
        acc_def = _extraction_accuracy(defended, heuristic)
        acc_base = _extraction_accuracy(baseline, heuristic)
        drop = (acc_base - acc_def) / acc_base if acc_base > 0 else 0.0
        report.adversary_acc[heuristic] = OrderedDict(defended=acc_def, baseline=acc_base, relative_drop=drop)
        logger.info(f'Adversary [{heuristic}] accuracy: baseline {acc_base:.4f}, defended {acc_def:.4f} '
                    f'(relative drop {drop:.2%})')

    size = len(defended.user_qubits)
    for subset in itertools.combinations(range(defended.log.n_qubits), size):
        key = ','.join(str(q) for q in subset)
        report.subset_acc[key] = OrderedDict(
            defended=_extraction_accuracy(defended, 'weighted_exp', subset),
            baseline=_extraction_accuracy(baseline, 'weighted_exp', subset))

    report.user_acc_defended = user_accuracy(defended)
    report.user_acc_baseline = user_accuracy(baseline)
    report.user_acc_delta = report.user_acc_defended - report.user_acc_baseline
    report.overhead_epochs = overhead_epochs(defended.train_acc, baseline.train_acc)
    report.train_acc_curves = OrderedDict(defended=list(defended.train_acc), baseline=list(baseline.train_acc))
    logger.info(f'User accuracy: baseline {report.user_acc_baseline:.4f}, defended {report.user_acc_defended:.4f}; '
                f'overhead epochs: {report.overhead_epochs}')
    return report
