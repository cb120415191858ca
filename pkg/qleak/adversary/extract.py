import numpy as np
import pandas as pd
from dataclasses import dataclass
from os import path as osp

from ..utils import DataError, get_root_logger
from .vote import group_points, resolve_heuristic, vote


@dataclass(frozen=True)
class ExtractedDataset:
    """Angle vectors with voted labels, as reconstructed by the cloud.

    Args:
        angles (ndarray): k x d encoded inputs.
        labels (ndarray): k voted labels.
        margins (ndarray): Winner share of the vote weight, in (0, 1].
        n_classes (int): Size of the adversary's label space.
        heuristic (str): Vote used.
        view (str): 'expvals' or 'class_probs'.
    """
    angles: np.ndarray
    labels: np.ndarray
    margins: np.ndarray
    n_classes: int
    heuristic: str
    view: str = 'expvals'

    def __len__(self):
        return self.labels.shape[0]

    def to_frame(self):
        frame = pd.DataFrame(self.angles, columns=[f'a{i}' for i in range(self.angles.shape[1])])
        frame['voted_label'] = self.labels
        frame['margin'] = self.margins
        return frame

    def write_csv(self, path):
        self.to_frame().to_csv(path, index=False, float_format='%.17g')
        return path

    @classmethod
    def read_csv(cls, path, n_classes=None, heuristic='unknown', view='expvals'):
        if not osp.isfile(path):
            raise DataError(f'Extraction not found: {path}')
        try:
            frame = pd.read_csv(path, float_precision='round_trip')
        except pd.errors.EmptyDataError as e:
            raise DataError(f'{path} is empty') from e
        except pd.errors.ParserError as e:
            raise DataError(f'{path}: malformed row ({e})') from e
        if 'voted_label' not in frame.columns:
            raise DataError(f'{path} has no voted_label column')
        angle_columns = [c for c in frame.columns if c.startswith('a')]
        labels = frame['voted_label'].to_numpy(dtype=np.int64)
        if n_classes is None:
            n_classes = int(labels.max()) + 1 if labels.size else 0
        margins = frame['margin'].to_numpy(dtype=np.float64) if 'margin' in frame else np.ones(labels.shape)
        return cls(
            angles=frame[angle_columns].to_numpy(dtype=np.float64),
            labels=labels,
            margins=margins,
            n_classes=n_classes,
            heuristic=heuristic,
            view=view)


def extract(log_store, heuristic, assumed_qubits=None, total_epochs=None, view='expvals'):
    """Group the log per point and vote one label for each.

    Args:
        log_store (EpochLogStore): Observed records.
        heuristic (str): 'majority', 'weighted_linear' or 'weighted_exp'
            (aliases 'wlinear' and 'wexp').
        assumed_qubits (list[int] | None): Qubits the adversary reads in the
            expvals view. Default: every qubit.
        total_epochs (int | None): Epoch count behind the exponential
            rollover. Default: the last observed epoch.
        view (str): 'expvals' or 'class_probs'. Default: 'expvals'.

    Returns:
        ExtractedDataset
    """
    heuristic = resolve_heuristic(heuristic)
    if len(log_store) == 0:
        raise DataError('Cannot extract labels from an empty epoch log')
    if total_epochs is None:
        total_epochs = log_store.last_epoch
    histories = group_points(log_store, view=view, assumed_qubits=assumed_qubits)
    labels = np.empty(len(histories), dtype=np.int64)
    margins = np.empty(len(histories), dtype=np.float64)
    for i, history in enumerate(histories):
        labels[i], margins[i] = vote(history, heuristic, total_epochs)

    if view == 'class_probs':
        n_classes = len(log_store.records[0].probs)
    else:
        n_classes = len(assumed_qubits) if assumed_qubits is not None else log_store.n_qubits
    logger = get_root_logger()
    logger.info(f'Extracted {len(histories)} points with [{heuristic}] over {total_epochs} epochs ({view} view).')
    return ExtractedDataset(
        angles=np.asarray([h.angles for h in histories], dtype=np.float64),
        labels=labels,
        margins=margins,
        n_classes=n_classes,
        heuristic=heuristic,
        view=view)


def extract_at_checkpoints(log_store, heuristic, checkpoints, assumed_qubits=None, view='expvals'):
    """Extraction from the first t epochs of one log, for every t in `checkpoints`.

    Returns:
        dict[int, ExtractedDataset]: Keyed by t, skipping t beyond the log.
    """
    out = {}
    for t in sorted(set(int(t) for t in checkpoints)):
        if t < 1 or t > log_store.last_epoch:
            continue
        out[t] = extract(log_store.truncate(t), heuristic, assumed_qubits, total_epochs=t, view=view)
    return out
