import numpy as np
from sklearn.model_selection import KFold

from ..utils import DataError, get_root_logger
from .classifiers import fit_quietly


def kfold_indices(n, k, seed):
    """Split range(n) into k disjoint, seeded-shuffled folds.

    Fold sizes differ by at most one; the first n mod k folds are the larger.

    Returns:
        list[ndarray]: Held-out indices of every fold, each sorted.
    """
    if k < 2:
        raise ValueError(f'k must be >= 2, got {k}')
    if k > n:
        raise ValueError(f'Cannot split {n} points into {k} folds')
    splitter = KFold(n_splits=k, shuffle=True, random_state=seed)
    return [np.sort(hold) for _, hold in splitter.split(np.zeros((n, 1)))]


def _folds_cover_classes(labels, folds):
    """True when every class with two or more members appears in every training partition."""
    classes, counts = np.unique(labels, return_counts=True)
    required = set(classes[counts >= 2].tolist())
    mask = np.ones(labels.shape[0], dtype=bool)
    for hold in folds:
        mask[:] = True
        mask[hold] = False
        if not required.issubset(np.unique(labels[mask]).tolist()):
            return False
    return True


def fit_predict_oof(dataset, spec, k, seed):
    """Out-of-fold class probabilities of one classifier.

    Every point is predicted by a model trained without its fold. Classes
    absent from a training partition get probability 0 for that fold.

    Args:
        dataset (ExtractedDataset): Angles with current labels.
        spec (ClassifierSpec): Classifier to fit.
        k (int): Number of folds.
        seed (int): Fold and estimator seed; seed + 1 is used for the single
            resample when a fold starves a class.

    Returns:
        ndarray: n x C probabilities, rows summing to 1.
    """
    angles, labels = dataset.angles, dataset.labels
    n = labels.shape[0]
    folds = kfold_indices(n, k, seed)
    if not _folds_cover_classes(labels, folds):
        get_root_logger().debug(f'Folds of k={k} starve a class, resampling with seed {seed + 1}')
        folds = kfold_indices(n, k, seed + 1)
        if not _folds_cover_classes(labels, folds):
            raise DataError(f'k={k} folds leave a class out of a training partition even after resampling')

    probs = np.zeros((n, dataset.n_classes), dtype=np.float64)
    for hold in folds:
        train = np.setdiff1d(np.arange(n), hold, assume_unique=True)
        if np.unique(labels[train]).size == 1:
            # a single class left: it takes all the mass
            probs[hold, labels[train][0]] = 1.0
            continue
        estimator = fit_quietly(spec.build(train.size, seed), angles[train], labels[train])
        probs[np.ix_(hold, estimator.classes_)] = estimator.predict_proba(angles[hold])
    return probs
