import numpy as np
from dataclasses import dataclass
from fractions import Fraction

from ..utils.registry import HEURISTIC_REGISTRY

GROUP_TOL = 1e-9
HEURISTIC_ALIASES = {'wlinear': 'weighted_linear', 'wexp': 'weighted_exp'}
VIEWS = ('expvals', 'class_probs')


@dataclass(frozen=True)
class PointHistory:
    """Label guesses of one encoded point, at most one per epoch, in epoch order."""
    angles: tuple
    guesses: tuple

    def __len__(self):
        return len(self.guesses)


def resolve_heuristic(name):
    name = HEURISTIC_ALIASES.get(name, name)
    HEURISTIC_REGISTRY.get(name)
    return name


def rollover_epoch(total_epochs):
    """ceil(0.9 * total_epochs), in integer arithmetic."""
    return (9 * int(total_epochs) + 9) // 10


@HEURISTIC_REGISTRY.register(name='majority')
def majority_weight(epoch, total_epochs):
    return 1


@HEURISTIC_REGISTRY.register(name='weighted_linear')
def linear_weight(epoch, total_epochs):
    return epoch


@HEURISTIC_REGISTRY.register(name='weighted_exp')
def exp_weight(epoch, total_epochs):
    return 2**(min(epoch, rollover_epoch(total_epochs)) - 1)


def infer_epoch_label(expvals, assumed_qubits=None):
    """Argmax over the expectations of the assumed qubits.

    The class id is the position within `assumed_qubits`; ties go to the lowest.
    """
    expvals = getattr(expvals, 'expvals', expvals)
    if assumed_qubits is None:
        assumed_qubits = range(len(expvals))
    assumed_qubits = list(assumed_qubits)
    if not assumed_qubits:
        raise ValueError('assumed_qubits must not be empty')
    view = np.asarray(expvals, dtype=np.float64)[assumed_qubits]
    return int(np.argmax(view))


def class_probs_label(record):
    """Argmax of the victim's softmax output recorded with the pass."""
    if record.probs is None:
        raise ValueError('This log carries no class probabilities; use the expvals view')
    return int(np.argmax(np.asarray(record.probs, dtype=np.float64)))


def group_points(log_store, view='expvals', assumed_qubits=None):
    """Match records across epochs by their angle vectors.

    Vectors equal within 1e-9 per coordinate are the same point. When a point
    shows up more than once in an epoch the first record of that epoch counts.

    Returns:
        list[PointHistory]: In order of first appearance.
    """
    if view not in VIEWS:
        raise ValueError(f'Unknown adversary view {view}. Supported ones are: {list(VIEWS)}')
    exact = {}
    canon = []
    guesses = []
    last_epoch = []
    for record in log_store:
        key = tuple(record.angles)
        idx = exact.get(key)
        if idx is None and canon:
            diff = np.abs(np.asarray(canon) - np.asarray(key)).max(axis=1)
            near = np.flatnonzero(diff <= GROUP_TOL)
            if near.size:
                idx = int(near[0])
                exact[key] = idx
        if idx is None:
            idx = len(canon)
            exact[key] = idx
            canon.append(key)
            guesses.append([])
            last_epoch.append(None)
        if last_epoch[idx] == record.epoch:
            continue
        if view == 'expvals':
            label = infer_epoch_label(record.expvals, assumed_qubits)
        else:
            label = class_probs_label(record)
        guesses[idx].append((record.epoch, label))
        last_epoch[idx] = record.epoch
    return [PointHistory(angles=a, guesses=tuple(g)) for a, g in zip(canon, guesses)]


def tally(history, heuristic, total_epochs=None):
    """Total vote weight per class, as exact integers."""
    if len(history) == 0:
        raise ValueError('Cannot vote on an empty history')
    weight_fn = HEURISTIC_REGISTRY.get(resolve_heuristic(heuristic))
    if total_epochs is None:
        total_epochs = max(epoch for epoch, _ in history.guesses)
    scores = {}
    for epoch, label in history.guesses:
        scores[label] = scores.get(label, 0) + weight_fn(epoch, total_epochs)
    return scores


def vote(history, heuristic, total_epochs=None):
    """Winning class and its share of the total weight; ties go to the lowest class."""
    scores = tally(history, heuristic, total_epochs)
    best = max(scores.values())
    winner = min(label for label, score in scores.items() if score == best)
    return winner, float(Fraction(best, sum(scores.values())))


def majority_vote(history):
    return vote(history, 'majority')[0]


def weighted_linear_vote(history):
    return vote(history, 'weighted_linear')[0]


def weighted_exp_vote(history, total_epochs):
    return vote(history, 'weighted_exp', total_epochs)[0]
