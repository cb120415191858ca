from .classifiers import DEFAULT_ENSEMBLE, ClassifierSpec, default_specs
from .kfold import fit_predict_oof, kfold_indices
from .refine import (ClassifierView, IterationStats, RefineConfig, RefineReport, aggregate_classifier_view,
                     flag_mislabeled, read_refined_csv, refine, update_or_prune)

__all__ = [
    'DEFAULT_ENSEMBLE', 'ClassifierSpec', 'default_specs', 'fit_predict_oof', 'kfold_indices', 'ClassifierView',
    'IterationStats', 'RefineConfig', 'RefineReport', 'aggregate_classifier_view', 'flag_mislabeled',
    'read_refined_csv', 'refine', 'update_or_prune'
]
