from .extract import ExtractedDataset, extract, extract_at_checkpoints
from .log_store import EpochLogStore, LogRecord, observe
from .vote import (PointHistory, class_probs_label, group_points, infer_epoch_label, majority_vote, resolve_heuristic,
                   rollover_epoch, tally, vote, weighted_exp_vote, weighted_linear_vote)

__all__ = [
    'ExtractedDataset', 'extract', 'extract_at_checkpoints', 'EpochLogStore', 'LogRecord', 'observe', 'PointHistory',
    'class_probs_label', 'group_points', 'infer_epoch_label', 'majority_vote', 'resolve_heuristic', 'rollover_epoch',
    'tally', 'vote', 'weighted_exp_vote', 'weighted_linear_vote'
]
