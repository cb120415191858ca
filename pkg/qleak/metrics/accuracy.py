import numpy as np

from ..utils.registry import METRIC_REGISTRY
from .metric_util import match_rows


@METRIC_REGISTRY.register()
def calculate_accuracy(pred, labels, **kwargs):
    """Fraction of predictions equal to the labels.

    Returns:
        float | None: None when there is nothing to score.
    """
    pred = np.asarray(pred).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    assert pred.shape == labels.shape, (f'Shapes are different: {pred.shape}, {labels.shape}.')
    if labels.size == 0:
        return None
    return float(np.mean(pred == labels))


@METRIC_REGISTRY.register()
def calculate_label_accuracy(angles, labels, gt_angles, gt_labels, **kwargs):
    """Share of extracted points whose voted label is the true one.

    Extracted angle vectors are matched to ground-truth rows within 1e-9; a
    point without a match counts as wrong.
    """
    labels = np.asarray(labels).reshape(-1)
    if labels.size == 0:
        return None
    rows = match_rows(angles, gt_angles)
    truth = np.where(rows >= 0, np.asarray(gt_labels)[np.maximum(rows, 0)], -1)
    return float(np.mean((rows >= 0) & (labels == truth)))


@METRIC_REGISTRY.register()
def calculate_wrong_labels(angles, labels, gt_angles, gt_labels, **kwargs):
    """Number of points whose label differs from the ground truth."""
    labels = np.asarray(labels).reshape(-1)
    rows = match_rows(angles, gt_angles)
    truth = np.where(rows >= 0, np.asarray(gt_labels)[np.maximum(rows, 0)], -1)
    return int(np.sum((rows < 0) | (labels != truth)))
