import numpy as np
import pytest
import tempfile
from os import path as osp

from qleak.adversary import ExtractedDataset
from qleak.data import make_blobs
from qleak.refinery import (ClassifierSpec, ClassifierView, RefineConfig, RefineReport, fit_predict_oof,
                            flag_mislabeled, kfold_indices, read_refined_csv, refine, update_or_prune)
from qleak.utils import ConfigError, DataError


def as_extracted(angles, labels, n_classes):
    labels = np.asarray(labels, dtype=np.int64)
    return ExtractedDataset(
        angles=np.asarray(angles, dtype=np.float64),
        labels=labels,
        margins=np.ones(labels.shape),
        n_classes=n_classes,
        heuristic='majority')


def blobs(n, n_classes, seed):
    table = make_blobs(n, 2, n_classes, 0.3, seed=seed)
    return as_extracted(table.features, table.labels, n_classes)


def test_kfold_indices():
    """Test refinery: seeded disjoint folds of near-equal size"""
    folds = kfold_indices(7, 5, seed=0)
    assert [len(f) for f in folds] == [2, 2, 1, 1, 1]
    assert sorted(np.concatenate(folds).tolist()) == list(range(7))
    again = kfold_indices(7, 5, seed=0)
    assert all(np.array_equal(a, b) for a, b in zip(folds, again))
    with pytest.raises(ValueError):
        kfold_indices(7, 1, seed=0)
    with pytest.raises(ValueError):
        kfold_indices(4, 5, seed=0)


def test_oof_probabilities():
    """Test refinery: out-of-fold probabilities cover every class column"""
    dataset = blobs(30, 3, seed=0)
    probs = fit_predict_oof(dataset, ClassifierSpec('logistic_regression'), 5, seed=0)
    assert probs.shape == (30, 3)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
    assert np.array_equal(probs.argmax(axis=1), dataset.labels)


def test_oof_singleton_class():
    """Test refinery: a class missing from a training partition gets probability 0"""
    angles = [[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [3.0, 3.0], [3.1, 3.0], [3.0, 3.1], [6.0, 0.0]]
    dataset = as_extracted(angles, [0, 0, 0, 1, 1, 1, 2], 3)
    probs = fit_predict_oof(dataset, ClassifierSpec('knn'), 7, seed=0)
    assert probs.shape == (7, 3)
    assert probs[6, 2] == 0
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)


def test_classifier_spec():
    spec = ClassifierSpec.from_opt({'type': 'knn', 'k': 5})
    assert spec.name == 'knn'
    assert spec.to_dict() == {'type': 'knn', 'k': 5}
    assert spec.build(3, seed=0).steps[-1][1].n_neighbors == 3
    assert ClassifierSpec.from_opt('mlp') == ClassifierSpec('mlp')
    with pytest.raises(ConfigError):
        ClassifierSpec('xgboost')
    with pytest.raises(ConfigError):
        ClassifierSpec.from_opt({'k': 3})


def test_flag_rule():
    """Test refinery: a point is flagged only when every classifier disagrees with it"""
    labels = np.array([0, 1, 2])
    views = [
        ClassifierView('a', np.eye(3)[[1, 1, 0]], np.array([1, 1, 0])),
        ClassifierView('b', np.eye(3)[[2, 1, 0]], np.array([2, 1, 0])),
    ]
    assert flag_mislabeled(labels, views).tolist() == [0, 2]
    views[1] = ClassifierView('b', np.eye(3)[[0, 1, 0]], np.array([0, 1, 0]))
    assert flag_mislabeled(labels, views).tolist() == [2]
    with pytest.raises(ValueError):
        flag_mislabeled(labels, views[:1])


def test_update_or_prune():
    """Test refinery: unanimous confident predictions relabel, the rest is pruned"""
    dataset = as_extracted(np.zeros((3, 2)), [0, 1, 2], 3)
    probs = np.array([[0.1, 0.6, 0.3], [0.0, 1.0, 0.0], [0.7, 0.1, 0.2]])
    views = [
        ClassifierView('a', probs, np.array([1, 1, 0])),
        ClassifierView('b', probs[:, [0, 2, 1]], np.array([2, 1, 0])),
    ]
    refined, keep, labels, relabeled, pruned = update_or_prune(dataset, [0, 2], views, threshold=0.6)
    # point 0: predictions differ; point 2: both say 0 with mean 0.7
    assert keep.tolist() == [False, True, True]
    assert labels.tolist()[1:] == [1, 0]
    assert (relabeled, pruned) == (1, 1)
    assert refined.labels.tolist() == [1, 0]

    # the threshold is strict
    _, keep, _, relabeled, pruned = update_or_prune(dataset, [2], views, threshold=0.7)
    assert keep.tolist() == [True, True, False]
    assert (relabeled, pruned) == (0, 1)


def test_refine_leaves_clean_data_alone():
    """Test refinery: correctly labeled separable data passes unchanged"""
    dataset = blobs(40, 2, seed=3)
    config = RefineConfig(k_values=(5, ), max_iterations=3, seed=0)
    report = refine(dataset, config)
    assert np.array_equal(report.final_labels, dataset.labels)
    assert report.n_pruned == 0 and report.n_relabeled == 0
    assert len(report.iterations) == 1
    assert report.iterations[0].flagged == 0


def test_refine_reduces_wrong_labels():
    """Test refinery: flipped labels on separable data are fixed or pruned"""
    clean = blobs(40, 2, seed=3)
    noisy_labels = clean.labels.copy()
    flipped = [0, 7, 19, 33]
    noisy_labels[flipped] = 1 - noisy_labels[flipped]
    noisy = as_extracted(clean.angles, noisy_labels, 2)

    report = refine(noisy, RefineConfig(k_values=(5, 7), max_iterations=3, seed=0))
    wrong_before = int((noisy_labels != clean.labels).sum())
    kept = report.kept
    wrong_after = int((report.final_labels[kept] != clean.labels[kept]).sum())
    assert wrong_before == 4
    assert wrong_after < wrong_before
    assert report.iterations[0].flagged >= 1
    assert len(report.dataset) == int(kept.sum())


@pytest.mark.parametrize('seed', [0, 1, 2])
def test_refine_under_heavy_label_noise(seed):
    """Test refinery: 30% flipped labels on blobs, wrong labels strictly decrease"""
    clean = blobs(100, 2, seed=seed)
    flipped = np.random.default_rng(seed).choice(100, size=30, replace=False)
    noisy_labels = clean.labels.copy()
    noisy_labels[flipped] = 1 - noisy_labels[flipped]
    noisy = as_extracted(clean.angles, noisy_labels, 2)

    report = refine(noisy, RefineConfig(k_values=(5, 7), max_iterations=3, seed=seed))
    kept = report.kept
    wrong_after = int((report.final_labels[kept] != clean.labels[kept]).sum())
    assert wrong_after < 30
    for it in report.iterations:
        assert it.relabeled + it.pruned == it.flagged


def test_refine_edge_cases():
    empty = as_extracted(np.zeros((0, 2)), [], 2)
    with pytest.raises(DataError):
        refine(empty, RefineConfig())

    # fewer points than the smallest k: nothing to do
    tiny = as_extracted([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]], [0, 1, 0], 2)
    report = refine(tiny, RefineConfig(k_values=(5, )))
    assert report.iterations == []
    assert np.array_equal(report.final_labels, tiny.labels)


def test_refine_config():
    config = RefineConfig.from_opt({
        'k_values': [3, 4],
        'confidence_threshold': 0.6,
        'classifiers': [{
            'type': 'knn',
            'k': 3
        }, 'logistic_regression']
    }, seed=5)
    assert config.k_values == (3, 4)
    assert config.seed == 5
    assert [s.name for s in config.classifiers] == ['knn', 'logistic_regression']
    assert [s.name for s in RefineConfig().classifiers] == ['logistic_regression', 'knn', 'mlp']
    assert config.to_dict()['classifiers'][0] == {'type': 'knn', 'k': 3}
    with pytest.raises(ConfigError):
        RefineConfig(confidence_threshold=1.0)
    with pytest.raises(ConfigError):
        RefineConfig(k_values=(1, 5))
    with pytest.raises(ConfigError):
        RefineConfig(classifiers=('knn', ))
    with pytest.raises(ConfigError):
        RefineConfig(max_iterations=0)


def test_report_csv():
    """Test refinery: report actions and the refined CSV"""
    original = as_extracted([[0.25, 1.0], [0.5, 2.0], [0.75, 3.0]], [0, 1, 1], 2)
    report = RefineReport(original=original, final_labels=np.array([0, 0, -1]), config=RefineConfig())
    assert report.actions().tolist() == ['kept', 'relabeled', 'pruned']
    assert (report.n_relabeled, report.n_pruned) == (1, 1)
    summary = report.to_dict()
    assert (summary['n_input'], summary['n_kept']) == (3, 2)

    with tempfile.TemporaryDirectory() as tmpdir:
        path = report.write_csv(osp.join(tmpdir, 'refined.csv'))
        refined = read_refined_csv(path, n_classes=2)
        assert refined.labels.tolist() == [0, 0]
        np.testing.assert_array_equal(refined.angles, original.angles[:2])
        assert refined.heuristic == 'refined'
        with pytest.raises(DataError):
            read_refined_csv(osp.join(tmpdir, 'missing.csv'))
