"""Iterative k-fold ensemble refinement of an extracted dataset.

Every classifier of the ensemble predicts each point out-of-fold for several
k, the probabilities are averaged over k, and a point is flagged when every
classifier disagrees with its current label. Flagged points are relabeled
when the ensemble is unanimous and confident, pruned otherwise.
"""
import numpy as np
import pandas as pd
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from tqdm import tqdm

from ..adversary.extract import ExtractedDataset
from ..utils import ConfigError, DataError, get_root_logger
from .classifiers import ClassifierSpec, default_specs
from .kfold import fit_predict_oof

ACTIONS = ('kept', 'relabeled', 'pruned')


@dataclass(frozen=True)
class RefineConfig:
    """
    Args:
        k_values (tuple[int]): Fold counts averaged per classifier. Default: (5, 7, 10, 15).
        confidence_threshold (float): Mean probability a relabel must exceed. Default: 0.8.
        max_iterations (int): Upper bound on flag/update rounds. Default: 5.
        seed (int): Fold and estimator seed. Default: 0.
        classifiers (tuple[ClassifierSpec]): Ensemble. Default: logistic
            regression, knn and mlp.
    """
    k_values: tuple = (5, 7, 10, 15)
    confidence_threshold: float = 0.8
    max_iterations: int = 5
    seed: int = 0
    classifiers: tuple = None

    def __post_init__(self):
        if not 0 < self.confidence_threshold < 1:
            raise ConfigError(f'refine.confidence_threshold must lie in (0, 1), got {self.confidence_threshold}')
        if not self.k_values or any(int(k) < 2 for k in self.k_values):
            raise ConfigError(f'refine.k_values must be non-empty and all >= 2, got {list(self.k_values)}')
        if self.max_iterations < 1:
            raise ConfigError(f'refine.max_iterations must be >= 1, got {self.max_iterations}')
        object.__setattr__(self, 'k_values', tuple(int(k) for k in self.k_values))
        specs = default_specs() if self.classifiers is None else self.classifiers
        specs = tuple(s if isinstance(s, ClassifierSpec) else ClassifierSpec.from_opt(s) for s in specs)
        if len(specs) < 2:
            raise ConfigError('refine.classifiers needs at least two classifiers')
        object.__setattr__(self, 'classifiers', specs)

    @classmethod
    def from_opt(cls, opt, seed=0):
        opt = opt or {}
        return cls(
            k_values=tuple(opt.get('k_values', (5, 7, 10, 15))),
            confidence_threshold=float(opt.get('confidence_threshold', 0.8)),
            max_iterations=int(opt.get('max_iterations', 5)),
            seed=int(opt.get('seed', seed)),
            classifiers=opt.get('classifiers'))

    def to_dict(self):
        return OrderedDict(
            k_values=list(self.k_values),
            confidence_threshold=self.confidence_threshold,
            max_iterations=self.max_iterations,
            seed=self.seed,
            classifiers=[s.to_dict() for s in self.classifiers])


@dataclass(frozen=True)
class ClassifierView:
    """Mean out-of-fold probabilities of one classifier and its argmax labels."""
    name: str
    probs: np.ndarray
    labels: np.ndarray


@dataclass
class IterationStats:
    iteration: int
    size: int
    flagged: int
    relabeled: int
    pruned: int

    def to_dict(self):
        return OrderedDict(
            iteration=self.iteration,
            size=self.size,
            flagged=self.flagged,
            relabeled=self.relabeled,
            pruned=self.pruned)


@dataclass
class RefineReport:
    """Outcome of a refinement.

    Args:
        original (ExtractedDataset): Input dataset.
        final_labels (ndarray): Label of every input row after refinement,
            -1 where the row was pruned.
        iterations (list[IterationStats]): Per-round counts.
        config (RefineConfig): Settings used.
    """
    original: object
    final_labels: np.ndarray
    iterations: list = field(default_factory=list)
    config: RefineConfig = None

    @property
    def kept(self):
        return self.final_labels >= 0

    @property
    def n_pruned(self):
        return int((~self.kept).sum())

    @property
    def n_relabeled(self):
        return int((self.kept & (self.final_labels != self.original.labels)).sum())

    @property
    def dataset(self):
        """The refined ExtractedDataset: kept rows with their final labels."""
        kept = self.kept
        return replace(
            self.original,
            angles=self.original.angles[kept],
            labels=self.final_labels[kept],
            margins=self.original.margins[kept])

    def actions(self):
        out = np.full(self.final_labels.shape, 'kept', dtype=object)
        out[self.kept & (self.final_labels != self.original.labels)] = 'relabeled'
        out[~self.kept] = 'pruned'
        return out

    def to_frame(self):
        angles = self.original.angles
        frame = pd.DataFrame(angles, columns=[f'a{i}' for i in range(angles.shape[1])])
        frame['original_label'] = self.original.labels
        frame['final_label'] = self.final_labels
        frame['action'] = self.actions()
        return frame

    def write_csv(self, path):
        self.to_frame().to_csv(path, index=False, float_format='%.17g')
        return path

    def to_dict(self):
        return OrderedDict(
            config=self.config.to_dict() if self.config is not None else None,
            n_input=int(self.final_labels.shape[0]),
            n_kept=int(self.kept.sum()),
            n_relabeled=self.n_relabeled,
            n_pruned=self.n_pruned,
            iterations=[it.to_dict() for it in self.iterations])


def read_refined_csv(path, n_classes=None):
    """Kept rows of a refined.csv as an ExtractedDataset with the final labels."""
    try:
        frame = pd.read_csv(path, float_precision='round_trip')
    except FileNotFoundError as e:
        raise DataError(f'Refined dataset not found: {path}') from e
    except pd.errors.EmptyDataError as e:
        raise DataError(f'{path} is empty') from e
    if 'final_label' not in frame.columns:
        raise DataError(f'{path} has no final_label column')
    frame = frame[frame['final_label'] >= 0]
    labels = frame['final_label'].to_numpy(dtype=np.int64)
    angle_columns = [c for c in frame.columns if c.startswith('a') and c[1:].isdigit()]
    if n_classes is None:
        n_classes = int(labels.max()) + 1 if labels.size else 0
    return ExtractedDataset(
        angles=frame[angle_columns].to_numpy(dtype=np.float64),
        labels=labels,
        margins=np.ones(labels.shape, dtype=np.float64),
        n_classes=n_classes,
        heuristic='refined')


def aggregate_classifier_view(dataset, spec, k_values, seed):
    """Mean out-of-fold probabilities of one classifier over every usable k.

    k values above the dataset size are skipped with a warning.

    Returns:
        ClassifierView
    """
    n = len(dataset)
    usable = [k for k in k_values if k <= n]
    skipped = [k for k in k_values if k > n]
    if skipped:
        get_root_logger().warning(f'Skipping k={skipped} for {n} points.')
    if not usable:
        raise DataError(f'No k in {list(k_values)} fits a dataset of {n} points')
    probs = np.mean([fit_predict_oof(dataset, spec, k, seed) for k in usable], axis=0)
    return ClassifierView(spec.name, probs, probs.argmax(axis=1))


def flag_mislabeled(labels, views):
    """Indices whose label every classifier's prediction disagrees with."""
    if len(views) < 2:
        raise ValueError(f'Flagging needs at least two classifiers, got {len(views)}')
    labels = np.asarray(labels, dtype=np.int64)
    disagree = np.ones(labels.shape, dtype=bool)
    for view in views:
        disagree &= view.labels != labels
    return np.flatnonzero(disagree)


def update_or_prune(dataset, flagged, views, threshold):
    """Relabel or prune every flagged point.

    A flagged point is relabeled when all classifiers predict the same class
    and their mean probability for it is strictly above `threshold`;
    otherwise it is pruned.

    Returns:
        tuple: (dataset', keep mask over the input rows, new labels of the
        input rows, relabeled count, pruned count)
    """
    labels = dataset.labels.copy()
    keep = np.ones(labels.shape, dtype=bool)
    relabeled = pruned = 0
    for i in flagged:
        predicted = {int(view.labels[i]) for view in views}
        if len(predicted) == 1:
            c = predicted.pop()
            confidence = float(np.mean([view.probs[i, c] for view in views]))
            if confidence > threshold:
                labels[i] = c
                relabeled += 1
                continue
        keep[i] = False
        pruned += 1
    refined = replace(dataset, angles=dataset.angles[keep], labels=labels[keep], margins=dataset.margins[keep])
    return refined, keep, labels, relabeled, pruned


def refine(dataset, config, specs=None, pbar=False):
    """Flag, then relabel or prune, until nothing is flagged or `max_iterations` rounds ran.

    Args:
        dataset (ExtractedDataset): Extracted points with voted labels.
        config (RefineConfig): Settings.
        specs (list[ClassifierSpec] | None): Ensemble. Default: config.classifiers.
        pbar (bool): Show a progress bar over classifiers. Default: False.

    Returns:
        RefineReport
    """
    if len(dataset) == 0:
        raise DataError('Cannot refine an empty dataset')
    specs = list(specs) if specs is not None else list(config.classifiers)
    if len(specs) < 2:
        raise ValueError(f'Refinement needs at least two classifiers, got {len(specs)}')
    logger = get_root_logger()
    logger.info(f'Refining {len(dataset)} points with {[s.name for s in specs]}, k={list(config.k_values)}, '
                f'threshold {config.confidence_threshold}.')

    rows = np.arange(len(dataset))  # input row of every current point
    final_labels = dataset.labels.copy()
    report = RefineReport(original=dataset, final_labels=final_labels, config=config)
    current = dataset
    for iteration in range(1, config.max_iterations + 1):
        if len(current) < min(config.k_values):
            logger.warning(f'Only {len(current)} points left, stopping refinement.')
            break
        iterator = tqdm(specs, desc=f'refine {iteration}', unit='clf') if pbar else specs
        views = [aggregate_classifier_view(current, spec, config.k_values, config.seed) for spec in iterator]
        flagged = flag_mislabeled(current.labels, views)
        current, keep, labels, relabeled, pruned = update_or_prune(current, flagged, views,
                                                                   config.confidence_threshold)
        final_labels[rows] = labels
        final_labels[rows[~keep]] = -1
        rows = rows[keep]
        report.iterations.append(IterationStats(iteration, int(keep.size), len(flagged), relabeled, pruned))
        logger.info(f'Refinement round {iteration}: {len(flagged)} flagged, {relabeled} relabeled, {pruned} pruned.')
        if len(flagged) == 0:
            break
        if len(current) == 0:
            logger.warning('Refinement pruned every point.')
            break
    return report
