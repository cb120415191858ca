import math
import numpy as np
import pandas as pd
import torch
from dataclasses import dataclass, field, replace
from os import path as osp
from sklearn import datasets as sk_datasets
from sklearn.model_selection import train_test_split
from torch.utils import data as data

from ..utils import DataError

TWO_PI = 2 * math.pi
# largest double below 2*pi, so scaled values stay in [0, 2*pi)
ANGLE_MAX = float(np.nextafter(TWO_PI, 0))


@dataclass(frozen=True)
class Scaler:
    """Per-feature min-max fitted on the train split."""
    mins: np.ndarray
    maxs: np.ndarray

    def transform(self, x):
        x = np.asarray(x, dtype=np.float64)
        span = self.maxs - self.mins
        constant = span == 0
        scaled = TWO_PI * (x - self.mins) / np.where(constant, 1.0, span)
        scaled = np.where(constant, math.pi, scaled)
        return np.clip(scaled, 0.0, ANGLE_MAX)

    def to_dict(self):
        return {'mins': self.mins.tolist(), 'maxs': self.maxs.tolist()}


@dataclass(frozen=True)
class TabularDataset:
    """Feature matrix with dense labels, a train/test split and the angle scaler.

    Args:
        features (ndarray): n x d float64.
        labels (ndarray): n int64 in [0, n_classes).
        n_classes (int): Class count C.
        train_idx (ndarray | None): Train rows. Default: every row.
        test_idx (ndarray | None): Test rows. Default: none.
        scaler (Scaler | None): Set once features are angles.
        class_values (tuple): Original label value of every dense class.
        name (str): Dataset name for logs.
    """
    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    train_idx: np.ndarray = None
    test_idx: np.ndarray = None
    scaler: Scaler = None
    class_values: tuple = field(default_factory=tuple)
    name: str = 'dataset'

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim != 2:
            raise DataError(f'Features must be a 2-D matrix, got shape {features.shape}')
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        n = features.shape[0]
        if labels.shape[0] != n:
            raise DataError(f'{n} feature rows but {labels.shape[0]} labels')
        if n and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise DataError(f'Labels must lie in [0, {self.n_classes})')
        train_idx = np.arange(n) if self.train_idx is None else np.asarray(self.train_idx, dtype=np.int64)
        test_idx = np.zeros(0, dtype=np.int64) if self.test_idx is None else np.asarray(self.test_idx, dtype=np.int64)
        if np.intersect1d(train_idx, test_idx).size:
            raise DataError('Train and test splits overlap')
        if self.scaler is not None and n and ((features < 0).any() or (features >= TWO_PI).any()):
            raise DataError('Scaled features must lie in [0, 2*pi)')
        if not self.class_values:
            object.__setattr__(self, 'class_values', tuple(range(self.n_classes)))
        object.__setattr__(self, 'features', features)
        object.__setattr__(self, 'labels', labels)
        object.__setattr__(self, 'train_idx', train_idx)
        object.__setattr__(self, 'test_idx', test_idx)

    def __len__(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def is_scaled(self):
        return self.scaler is not None

    def train_features(self):
        return self.features[self.train_idx]

    def train_labels(self):
        return self.labels[self.train_idx]

    def test_features(self):
        return self.features[self.test_idx]

    def test_labels(self):
        return self.labels[self.test_idx]

    def replace(self, **changes):
        return replace(self, **changes)


class AngleDataset(data.Dataset):
    """One split of a scaled TabularDataset as torch samples, in row order.

    Args:
        table (TabularDataset): Scaled dataset.
        phase (str): 'train' or 'test'. Default: 'train'.
        adv_targets (array | None): Adversarial targets of the split's rows,
            used by defended training. Default: None.
    """

    def __init__(self, table, phase='train', adv_targets=None):
        super(AngleDataset, self).__init__()
        if phase not in ('train', 'test'):
            raise ValueError(f"Wrong dataset phase: {phase}. Supported ones are 'train' and 'test'.")
        if not table.is_scaled:
            raise DataError(f'Dataset {table.name} must be scaled to angles before training')
        self.table = table
        self.phase = phase
        rows = table.train_idx if phase == 'train' else table.test_idx
        self.angles = torch.as_tensor(table.features[rows], dtype=torch.float64)
        self.labels = torch.as_tensor(table.labels[rows], dtype=torch.long)
        self.adv_targets = None if adv_targets is None else torch.as_tensor(adv_targets, dtype=torch.long)
        if self.adv_targets is not None and self.adv_targets.shape != self.labels.shape:
            raise ValueError('adv_targets must have one entry per sample')

    def __getitem__(self, index):
        sample = {'angles': self.angles[index], 'labels': self.labels[index]}
        if self.adv_targets is not None:
            sample['adv_targets'] = self.adv_targets[index]
        return sample

    def __len__(self):
        return self.labels.shape[0]


def load_csv(path, label_column='label', name=None):
    """Read a CSV with a header row into a TabularDataset.

    Labels are re-indexed densely from 0 in sorted order of their values.
    Every other column is a feature.
    """
    if not osp.isfile(path):
        raise DataError(f'Dataset file not found: {path}')
    try:
        frame = pd.read_csv(path, float_precision='round_trip', skip_blank_lines=True)
    except pd.errors.EmptyDataError as e:
        raise DataError(f'{path} is empty') from e
    except pd.errors.ParserError as e:
        raise DataError(f'{path}: malformed row ({e})') from e
    if frame.empty:
        raise DataError(f'{path} has a header but no rows')
    if label_column not in frame.columns:
        raise DataError(f'{path} has no label column "{label_column}"; columns are {list(frame.columns)}')

    feature_columns = [c for c in frame.columns if c != label_column]
    if not feature_columns:
        raise DataError(f'{path} has no feature columns')
    for col in feature_columns + [label_column]:
        values = pd.to_numeric(frame[col], errors='coerce')
        bad = values.isna().to_numpy()
        if bad.any():
            line = int(np.argmax(bad)) + 2  # header is line 1
            raise DataError(f'{path}, line {line}: non-numeric value {frame[col].iloc[line - 2]!r} in column "{col}"')
        frame[col] = values
    raw_labels = frame[label_column].to_numpy()
    if not np.all(np.equal(np.mod(raw_labels, 1), 0)):
        line = int(np.argmax(np.mod(raw_labels, 1) != 0)) + 2
        raise DataError(f'{path}, line {line}: label must be an integer')
    class_values, labels = np.unique(raw_labels.astype(np.int64), return_inverse=True)
    return TabularDataset(
        features=frame[feature_columns].to_numpy(dtype=np.float64),
        labels=labels,
        n_classes=len(class_values),
        class_values=tuple(int(v) for v in class_values),
        name=name or osp.splitext(osp.basename(path))[0])


def write_csv(table, path, label_column='label', rows=None):
    """Write features f0..f{d-1} and the dense label with full float precision."""
    rows = np.arange(len(table)) if rows is None else rows
    frame = pd.DataFrame(table.features[rows], columns=[f'f{i}' for i in range(table.n_features)])
    frame[label_column] = table.labels[rows]
    frame.to_csv(path, index=False, float_format='%.17g')
    return path


def scale_to_angle(table):
    """Min-max scale to [0, 2*pi) with the range fitted on the train split only.

    A constant feature maps to pi. Test values outside the train range are
    clamped. Scaling an already scaled dataset returns it unchanged.
    """
    if table.is_scaled:
        return table
    if len(table.train_idx) == 0:
        raise DataError(f'Cannot fit the angle scaler of {table.name}: empty train split')
    train = table.train_features()
    scaler = Scaler(mins=train.min(axis=0), maxs=train.max(axis=0))
    return table.replace(features=scaler.transform(table.features), scaler=scaler)


def split(table, n_train, n_test, seed):
    """Seeded stratified split into n_train and n_test rows.

    Rows beyond n_train + n_test are dropped from both splits. Indices are
    returned sorted, so the train order follows the file order.
    """
    n = len(table)
    if n_train < 1 or n_test < 0:
        raise DataError(f'Need n_train >= 1 and n_test >= 0, got {n_train}/{n_test}')
    if n_train + n_test > n:
        raise DataError(f'Cannot split {n} rows into {n_train} train and {n_test} test rows')
    idx = np.arange(n)
    try:
        if n_train + n_test < n:
            idx, _ = train_test_split(idx, train_size=n_train + n_test, stratify=table.labels, random_state=seed)
        if n_test == 0:
            train_idx, test_idx = idx, idx[:0]
        else:
            train_idx, test_idx = train_test_split(
                idx, train_size=n_train, test_size=n_test, stratify=table.labels[idx], random_state=seed)
    except ValueError as e:
        raise DataError(f'Stratified split of {table.name} failed: {e}') from e
    return table.replace(train_idx=np.sort(train_idx), test_idx=np.sort(test_idx))


def make_blobs(n, d, n_classes, spread, seed):
    """Gaussian clusters at seeded random centers, labelled by cluster."""
    if n_classes < 2:
        raise ValueError(f'make_blobs needs at least 2 classes, got {n_classes}')
    if n < n_classes or d < 1 or spread < 0:
        raise ValueError(f'Invalid blob dimensions: n={n}, d={d}, C={n_classes}, spread={spread}')
    features, labels = sk_datasets.make_blobs(
        n_samples=n, n_features=d, centers=n_classes, cluster_std=spread, random_state=seed)
    return TabularDataset(features=features, labels=labels, n_classes=n_classes, name=f'blobs_{n_classes}c')


def load_iris():
    """The canonical 150-row Iris set bundled with scikit-learn."""
    features, labels = sk_datasets.load_iris(return_X_y=True)
    return TabularDataset(features=features, labels=labels, n_classes=3, name='iris')


def prepare_table(table, opt, seed):
    """Split (when `n_train` is set) and scale a freshly loaded dataset."""
    if opt.get('n_train') is not None:
        table = split(table, int(opt['n_train']), int(opt.get('n_test', 0)), seed)
    return scale_to_angle(table)
