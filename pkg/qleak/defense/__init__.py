from .masking import (DefenseConfig, DefenseReport, DefenseRun, assign_adversarial_targets, evaluate_defense,
                      make_defended_config, overhead_epochs, user_accuracy)

__all__ = [
    'DefenseConfig', 'DefenseReport', 'DefenseRun', 'assign_adversarial_targets', 'evaluate_defense',
    'make_defended_config', 'overhead_epochs', 'user_accuracy'
]
