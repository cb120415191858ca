"""End-to-end runs on Iris. Slow; enabled with --runslow."""
import json
import numpy as np
import pytest
import tempfile
from os import path as osp

from qleak.adversary import EpochLogStore, extract
from qleak.cli import main
from qleak.data import build_dataset
from qleak.models.qnn_model import QNNModel, QnnConfig
from qleak.train import train_qnn

ROOT = osp.join(osp.dirname(osp.abspath(__file__)), '../..')
IRIS_VICTIM = osp.join(ROOT, 'options/train/Iris/iris_victim.yml')
IRIS_VICTIM_FAST = osp.join(ROOT, 'options/train/Iris/iris_victim_lr1e-2.yml')
IRIS_DEFEND = osp.join(ROOT, 'options/train/Iris/iris_defend.yml')


def read_json(path):
    with open(path) as f:
        return json.load(f)


def checkpoints_near(checkpoints, targets=(0.5, 0.7, 0.9)):
    """The logged epoch whose train accuracy is closest to each target, in target order."""
    picked = []
    for target in targets:
        best = min(checkpoints, key=lambda c: (abs(c['train_acc'] - target), c['epoch']))
        if not picked or picked[-1]['epoch'] != best['epoch']:
            picked.append(best)
    return picked


@pytest.mark.slow
def test_separable_blobs_train_well():
    dataset = build_dataset({'type': 'BlobsDataset', 'n_samples': 40, 'n_features': 2, 'n_classes': 2,
                             'spread': 0.3, 'n_train': 30, 'n_test': 10}, seed=0)
    model = QNNModel(QnnConfig(n_qubits=2, n_layers=2, n_classes=2, lr=5e-2, batch_size=8, epochs=20, seed=0))
    report = train_qnn(model, dataset.table)
    assert report.final_train_acc >= 0.9


@pytest.mark.slow
def test_iris_extraction_refinement_and_clone():
    with tempfile.TemporaryDirectory() as tmpdir:
        run_dir = osp.join(tmpdir, 'iris')
        assert main(['train', '--config', IRIS_VICTIM, '--run-dir', run_dir]) == 0
        assert main(['attack', '--run-dir', run_dir]) == 0
        assert main(['refine', '--run-dir', run_dir]) == 0
        assert main(['clone', '--run-dir', run_dir]) == 0
        assert main(['report', '--run-dir', run_dir]) == 0
        report = read_json(osp.join(run_dir, 'report.json'))

    assert report['victim']['final_train_acc'] >= 0.85

    # extraction follows the victim's training accuracy
    trend = [c['extraction_acc'] for c in checkpoints_near(report['attack']['checkpoints'])]
    for before, after in zip(trend, trend[1:]):
        assert after >= before - 0.03

    scoring = report['refine']['scoring']
    assert scoring['wrong_before'] > 0
    # at least a tenth of the wrong labels fixed or pruned
    assert scoring['wrong_after'] * 10 <= scoring['wrong_before'] * 9
    assert scoring['pruned_share'] <= 0.05

    assert abs(report['clone']['test_acc_gap']) <= 0.05


@pytest.mark.slow
def test_iris_extraction_accuracy_over_seeds():
    victim_acc = []
    attack_acc = []
    with tempfile.TemporaryDirectory() as tmpdir:
        for seed in (0, 1, 2):
            run_dir = osp.join(tmpdir, f'seed{seed}')
            assert main(['train', '--config', IRIS_VICTIM_FAST, '--run-dir', run_dir, '--seed', str(seed)]) == 0
            assert main(['attack', '--run-dir', run_dir]) == 0
            report = read_json(osp.join(run_dir, 'report.json'))
            assert report['attack']['view'] == 'class_probs'
            victim_acc.append(report['victim']['final_train_acc'])
            attack_acc.append(report['attack']['accuracy'])

    assert np.mean(victim_acc) >= 0.9
    mean = {h: np.mean([acc[h] for acc in attack_acc]) for h in ('majority', 'weighted_linear', 'weighted_exp')}
    assert mean['weighted_exp'] >= 0.85
    assert mean['majority'] <= mean['weighted_linear'] + 0.02
    assert mean['weighted_linear'] + 0.02 <= mean['weighted_exp'] + 0.04


@pytest.mark.slow
def test_iris_defense():
    with tempfile.TemporaryDirectory() as tmpdir:
        run_dir = osp.join(tmpdir, 'defend')
        assert main(['defend', '--config', IRIS_DEFEND, '--run-dir', run_dir]) == 0
        report = read_json(osp.join(run_dir, 'defense_report.json'))
        baseline_log = EpochLogStore.load(osp.join(run_dir, 'defense', 'baseline_log.jsonl'))

        control_dir = osp.join(tmpdir, 'control')
        assert main(['defend', '--config', IRIS_DEFEND, '--run-dir', control_dir, '--alpha', '0']) == 0
        control = read_json(osp.join(control_dir, 'defense_report.json'))

    assert report['alpha'] == 1.0
    assert report['adversary_acc']['weighted_exp']['relative_drop'] >= 0.5
    curves = report['train_acc_curves']
    assert len(curves['baseline']) == len(curves['defended'])
    assert curves['baseline'][-1] - curves['defended'][-1] <= 0.05
    # the log carries exactly the train rows
    extracted = extract(baseline_log, 'weighted_exp', view='class_probs')
    assert len(extracted) == 90
    # the user reads the same last-epoch pass the cloud logged
    assert report['user_acc_baseline'] == pytest.approx(curves['baseline'][-1], abs=1e-12)
    assert np.isfinite(report['user_acc_delta'])

    # without the adversarial term the attack works as well as on the baseline
    assert control['alpha'] == 0.0
    acc = control['adversary_acc']['weighted_exp']
    assert acc['baseline'] - acc['defended'] < 0.05
