"""Command-line stages of an extraction experiment.

    qleak train   --config options/train/Iris/iris_victim.yml
    qleak attack  --run-dir experiments/iris_victim --heuristic all
    qleak refine  --run-dir experiments/iris_victim
    qleak clone   --run-dir experiments/iris_victim
    qleak defend  --config options/train/Iris/iris_defend.yml --alpha 1.0
    qleak report  --run-dir experiments/iris_victim

Each stage reads the artifacts of the previous ones from the run directory and
writes its own next to them. Ground-truth files are read only for scoring.
"""
import argparse
import numpy as np
import os
import pandas as pd
import sys
import time
from collections import OrderedDict
from dataclasses import dataclass
from os import path as osp

from .adversary import EpochLogStore, ExtractedDataset, extract, extract_at_checkpoints
from .adversary.vote import VIEWS, resolve_heuristic
from .data import TabularDataset, build_dataset, write_csv
from .data.data_util import TWO_PI, Scaler
from .defense import DefenseConfig, DefenseRun, evaluate_defense, make_defended_config
from .defense.masking import HEURISTICS
from .metrics import calculate_label_accuracy, calculate_wrong_labels
from .models import build_model
from .models.qnn_model import QNNModel, QnnConfig
from .refinery import RefineConfig, read_refined_csv, refine
from .train import TrainReport, train_qnn
from .utils import (ConfigError, DataError, InvariantError, RunLock, get_env_info, get_root_logger, get_time_str,
                    init_tb_logger, read_json, set_random_seed, write_json)
from .utils.options import dict2str, dump_options, parse_options
from .utils.registry import DATASET_REGISTRY, MODEL_REGISTRY

EXIT_CODES = OrderedDict([(ConfigError, 2), (DataError, 3), (InvariantError, 4)])
PLOT_FILES = ('heuristic_accuracy.csv', 'accuracy_vs_training.csv', 'refinement.csv', 'victim_vs_clone.csv',
              'defense.csv')


@dataclass(frozen=True)
class RunConfig:
    """Typed view of the top-level options of one run.

    Args:
        name (str): Run name.
        run_dir (str): Absolute run directory.
        seed (int): Seed of every stochastic component.
        dataset_opt (dict): Options of the victim's dataset.
        refine (RefineConfig): Refinement settings.
        defense (DefenseConfig | None): Defense settings, if configured.
        heuristics (tuple[str]): Votes run by the attack.
        primary_heuristic (str): Vote whose extraction is refined.
        view (str): Adversary view, 'expvals' or 'class_probs'.
        assumed_qubits (tuple | None): Qubits read in the expvals view.
        checkpoints (tuple | None): Epochs for the extraction-vs-training curve.
            Default: every epoch.
        pbar (bool): Progress bars in long loops.
    """
    name: str
    run_dir: str
    seed: int
    dataset_opt: dict
    refine: RefineConfig
    defense: DefenseConfig = None
    heuristics: tuple = HEURISTICS
    primary_heuristic: str = 'weighted_exp'
    view: str = 'class_probs'
    assumed_qubits: tuple = None
    checkpoints: tuple = None
    pbar: bool = False

    @classmethod
    def from_opt(cls, opt):
        datasets = opt.get('datasets') or {}
        dataset_opt = datasets.get('train')
        if dataset_opt is None or 'type' not in dataset_opt:
            raise ConfigError('datasets.train with a type is required')
        if dataset_opt['type'] not in DATASET_REGISTRY:
            raise ConfigError(f'Unknown datasets.train.type {dataset_opt["type"]}. '
                              f'Supported ones are: {sorted(DATASET_REGISTRY.keys())}')
        model_type = opt.get('model_type', 'QNNModel')
        if model_type not in MODEL_REGISTRY:
            raise ConfigError(f'Unknown model_type {model_type}. Supported ones are: {sorted(MODEL_REGISTRY.keys())}')
        dataroot = dataset_opt.get('dataroot')
        if dataroot is not None and not osp.isfile(dataroot):
            raise ConfigError(f'Dataset file not found: {dataroot}')

        attack_opt = opt.get('attack') or {}
        heuristic = attack_opt.get('heuristic', 'all')
        try:
            heuristics = HEURISTICS if heuristic == 'all' else (resolve_heuristic(heuristic), )
            primary = resolve_heuristic(attack_opt.get('primary', 'weighted_exp'))
        except KeyError as e:
            raise ConfigError(str(e)) from e
        if primary not in heuristics:
            primary = heuristics[0]
        view = attack_opt.get('view', 'class_probs')
        if view not in VIEWS:
            raise ConfigError(f'Unknown adversary view {view}. Supported ones are: {list(VIEWS)}')
        assumed = attack_opt.get('assumed_qubits')
        checkpoints = attack_opt.get('checkpoints')
        seed = int(opt['manual_seed'])
        return cls(
            name=opt['name'],
            run_dir=opt['path']['run_dir'],
            seed=seed,
            dataset_opt=dataset_opt,
            refine=RefineConfig.from_opt(opt.get('refine'), seed=seed),
            defense=DefenseConfig.from_opt(opt['defense']) if opt.get('defense') is not None else None,
            heuristics=tuple(heuristics),
            primary_heuristic=primary,
            view=view,
            assumed_qubits=tuple(assumed) if assumed is not None else None,
            checkpoints=tuple(checkpoints) if checkpoints is not None else None,
            pbar=bool((opt.get('logger') or {}).get('pbar', False)))

    def path(self, *names):
        return osp.join(self.run_dir, *names)


# ---------------------------------------------------------------------- #
# helpers
# ---------------------------------------------------------------------- #


def init_stage(opt, stage):
    """Attach the stage log file and log the options. Call it holding the run lock."""
    run_dir = opt['path']['run_dir']
    log_file = osp.join(run_dir, f"{stage}_{opt['name']}_{get_time_str()}.log")
    logger = get_root_logger(logger_name='qleak', log_file=log_file)
    logger.info(get_env_info())
    logger.info(f'Stage [{stage}] in {run_dir}')
    logger.info(dict2str(opt))
    return logger


def init_tb(opt, run):
    if (opt.get('logger') or {}).get('use_tb_logger'):
        return init_tb_logger(log_dir=run.path('tb_logger'))
    return None


def record_timing(run, stage, seconds):
    """Wall-clock time of a stage, kept out of report.json."""
    path = run.path('timings.json')
    timings = read_json(path) if osp.isfile(path) else {}
    timings[stage] = round(seconds, 3)
    write_json(timings, path)


def read_labeled_csv(path):
    """Angles and labels of a ground_truth.csv or test_set.csv."""
    if not osp.isfile(path):
        raise DataError(f'Missing file: {path}. Run the train stage first.')
    frame = pd.read_csv(path, float_precision='round_trip')
    feature_columns = [c for c in frame.columns if c.startswith('f') and c[1:].isdigit()]
    return frame[feature_columns].to_numpy(dtype=np.float64), frame['label'].to_numpy(dtype=np.int64)


def load_victim_table(run):
    set_random_seed(run.seed)
    return build_dataset(run.dataset_opt, seed=run.seed).table


def angle_table(train_angles, train_labels, test_angles, test_labels, n_classes, name):
    """A scaled TabularDataset from angle rows that are already in [0, 2*pi)."""
    features = np.concatenate([train_angles, test_angles], axis=0)
    labels = np.concatenate([train_labels, test_labels], axis=0)
    d = features.shape[1]
    n_train = train_angles.shape[0]
    return TabularDataset(
        features=features,
        labels=labels,
        n_classes=n_classes,
        train_idx=np.arange(n_train),
        test_idx=np.arange(n_train, features.shape[0]),
        scaler=Scaler(mins=np.zeros(d), maxs=np.full(d, TWO_PI)),
        name=name)


def train_observed(opt, config, table, log_path, tag, tb_logger=None):
    """Train one model with the cloud's epoch log streaming to `log_path`."""
    model = build_model(opt, config)
    with EpochLogStore(log_path) as log:
        report = train_qnn(model, table, observer=log, opt=opt, tag=tag, tb_logger=tb_logger)
    return model, log, report


# ---------------------------------------------------------------------- #
# stages
# ---------------------------------------------------------------------- #


def cmd_train(opt):
    """Train the victim with the cloud watching; returns the run directory."""
    run = RunConfig.from_opt(opt)
    start = time.time()
    with RunLock(run.run_dir):
        logger = init_stage(opt, 'train')
        dump_options(opt, run.run_dir)
        table = load_victim_table(run)
        config = QnnConfig.from_opt(opt, n_classes=table.n_classes)
        write_csv(table, run.path('ground_truth.csv'), rows=table.train_idx)
        write_csv(table, run.path('test_set.csv'), rows=table.test_idx)

        tb_logger = init_tb(opt, run)
        model, _, report = train_observed(opt, config, table, run.path('victim_log.jsonl'), 'victim', tb_logger)
        if tb_logger is not None:
            tb_logger.close()
        model.save(run.path('victim_checkpoint.yml'))
        report.write_csv(run.path('metrics.csv'))
        logger.info(f'Victim reached train accuracy {report.final_train_acc:.4f}, '
                    f'test accuracy {report.final_test_acc}.')
        record_timing(run, 'train', time.time() - start)
        write_report(run, warn=False)
    return run.run_dir


def cmd_attack(opt):
    """Vote labels from the epoch log with every configured heuristic."""
    run = RunConfig.from_opt(opt)
    start = time.time()
    with RunLock(run.run_dir):
        logger = init_stage(opt, 'attack')
        log = EpochLogStore.load(run.path('victim_log.jsonl'))
        gt_angles, gt_labels = read_labeled_csv(run.path('ground_truth.csv'))
        summary = OrderedDict(view=run.view, primary=run.primary_heuristic, heuristics=OrderedDict())
        for heuristic in run.heuristics:
            extracted = extract(log, heuristic, assumed_qubits=run.assumed_qubits, view=run.view)
            extracted.write_csv(run.path(f'extracted_{heuristic}.csv'))
            acc = calculate_label_accuracy(extracted.angles, extracted.labels, gt_angles, gt_labels)
            summary['heuristics'][heuristic] = OrderedDict(
                accuracy=acc, n_points=len(extracted), n_classes=extracted.n_classes)
            logger.info(f'[{heuristic}] label accuracy {acc:.4f} over {len(extracted)} points.')
            if heuristic == run.primary_heuristic:
                extracted.write_csv(run.path('extracted.csv'))
                summary['n_classes'] = extracted.n_classes

        # extraction from the first t epochs, against the victim's accuracy at t
        metrics = TrainReport.read_csv(run.path('metrics.csv')) if osp.isfile(run.path('metrics.csv')) else None
        checkpoints = run.checkpoints or tuple(log.epochs())
        curve = []
        partial = extract_at_checkpoints(
            log, run.primary_heuristic, checkpoints, assumed_qubits=run.assumed_qubits, view=run.view)
        for t, extracted in partial.items():
            train_acc = metrics.epochs[t - 1].train_acc if metrics is not None and t <= len(metrics.epochs) else None
            curve.append(
                OrderedDict(
                    epoch=t,
                    train_acc=train_acc,
                    extraction_acc=calculate_label_accuracy(extracted.angles, extracted.labels, gt_angles,
                                                            gt_labels)))
        summary['checkpoints'] = curve
        write_json(summary, run.path('attack_report.json'))
        record_timing(run, 'attack', time.time() - start)
        write_report(run, warn=False)
    return summary


def cmd_refine(opt):
    """Refine the primary extraction; writes refined.csv and refine_report.json."""
    run = RunConfig.from_opt(opt)
    start = time.time()
    with RunLock(run.run_dir):
        logger = init_stage(opt, 'refine')
        attack = read_json(run.path('attack_report.json')) if osp.isfile(run.path('attack_report.json')) else {}
        extracted = ExtractedDataset.read_csv(
            run.path('extracted.csv'), n_classes=attack.get('n_classes'), heuristic=run.primary_heuristic)
        if len(extracted) == 0:
            raise DataError(f'{run.path("extracted.csv")} holds no points to refine')
        report = refine(extracted, run.refine, pbar=run.pbar)
        report.write_csv(run.path('refined.csv'))
        doc = report.to_dict()
        doc['scoring'] = refinement_scoring(run, report)
        write_json(doc, run.path('refine_report.json'))
        logger.info(f'Refined {doc["n_input"]} points: {doc["n_relabeled"]} relabeled, {doc["n_pruned"]} pruned; '
                    f'wrong labels {doc["scoring"]["wrong_before"]} -> {doc["scoring"]["wrong_after"]}.')
        record_timing(run, 'refine', time.time() - start)
        write_report(run, warn=False)
    return report


def refinement_scoring(run, report):
    gt_angles, gt_labels = read_labeled_csv(run.path('ground_truth.csv'))
    before = calculate_wrong_labels(report.original.angles, report.original.labels, gt_angles, gt_labels)
    refined = report.dataset
    after = calculate_wrong_labels(refined.angles, refined.labels, gt_angles, gt_labels)
    n = len(report.original)
    return OrderedDict(
        wrong_before=before,
        wrong_after=after,
        wrong_reduction=(before - after) / before if before else 0.0,
        pruned_share=report.n_pruned / n if n else 0.0)


def cmd_clone(opt):
    """Train a fresh victim-architecture model on the refined extraction."""
    run = RunConfig.from_opt(opt)
    start = time.time()
    with RunLock(run.run_dir):
        logger = init_stage(opt, 'clone')
        victim = QNNModel.load(run.path('victim_checkpoint.yml'))
        config = victim.config
        refined = read_refined_csv(run.path('refined.csv'))
        if refined.labels.size and refined.labels.max() >= config.n_classes:
            raise DataError(f'Refined labels reach class {int(refined.labels.max())}, '
                            f'the victim architecture has {config.n_classes} classes')
        missing = sorted(set(range(config.n_classes)) - set(refined.labels.tolist()))
        if missing:
            raise DataError(f'Classes {missing} are absent from the refined dataset')
        test_angles, test_labels = read_labeled_csv(run.path('test_set.csv'))
        table = angle_table(refined.angles, refined.labels, test_angles, test_labels, config.n_classes,
                            f'{run.name}_clone')

        set_random_seed(run.seed)
        model = build_model(opt, config)
        report = train_qnn(model, table, observer=None, opt=opt, tag='clone', tb_logger=None)
        model.save(run.path('clone_checkpoint.yml'))
        report.write_csv(run.path('clone_metrics.csv'))
        logger.info(f'Clone reached train accuracy {report.final_train_acc:.4f}, '
                    f'test accuracy {report.final_test_acc}.')
        record_timing(run, 'clone', time.time() - start)
        write_report(run, warn=False)
    return report


def cmd_defend(opt):
    """Train an undefended baseline and a masking-defended victim and compare the attack on both."""
    run = RunConfig.from_opt(opt)
    if run.defense is None:
        raise ConfigError('The defend stage needs a defense section in the option file.')
    start = time.time()
    with RunLock(run.run_dir):
        logger = init_stage(opt, 'defend')
        dump_options(opt, run.run_dir)
        out_dir = run.path('defense')
        os.makedirs(out_dir, exist_ok=True)
        table = load_victim_table(run)
        base = QnnConfig.from_opt(opt, n_classes=table.n_classes)
        defended_config = make_defended_config(base, run.defense)
        gt_angles, gt_labels = table.train_features(), table.train_labels()

        runs = OrderedDict()
        for tag, config in (('baseline', base), ('defended', defended_config)):
            set_random_seed(run.seed)
            model, log, report = train_observed(opt, config, table, osp.join(out_dir, f'{tag}_log.jsonl'), tag)
            model.save(osp.join(out_dir, f'{tag}_checkpoint.yml'))
            report.write_csv(osp.join(out_dir, f'{tag}_metrics.csv'))
            runs[tag] = DefenseRun(log, report.train_acc_curve(), gt_angles, gt_labels, config.measured_qubits)

        report = evaluate_defense(
            runs['defended'], runs['baseline'], alpha=run.defense.alpha, n_mask_classes=run.defense.n_mask_classes)
        write_json(report.to_dict(), run.path('defense_report.json'))
        logger.info(f'Defense report written to {run.path("defense_report.json")}')
        record_timing(run, 'defend', time.time() - start)
        write_report(run, warn=False)
    return report


def cmd_report(opt):
    """Merge every finished stage into report.json and emit the plot-data CSVs."""
    run = RunConfig.from_opt(opt)
    with RunLock(run.run_dir):
        init_stage(opt, 'report')
        return write_report(run, warn=True)


def write_report(run, warn=True):
    """Rebuild report.json and plots/*.csv from the persisted artifacts.

    Accuracies are recomputed from the stage files, so the report cannot drift
    from them.
    """
    logger = get_root_logger()
    report = OrderedDict()
    plots = OrderedDict()

    metrics_path = run.path('metrics.csv')
    victim = TrainReport.read_csv(metrics_path) if osp.isfile(metrics_path) else None
    if victim is not None:
        report['victim'] = OrderedDict(
            epochs=len(victim.epochs), final_train_acc=victim.final_train_acc, final_test_acc=victim.final_test_acc)

    gt_path = run.path('ground_truth.csv')
    attack_path = run.path('attack_report.json')
    if osp.isfile(attack_path) and osp.isfile(gt_path):
        gt_angles, gt_labels = read_labeled_csv(gt_path)
        attack = read_json(attack_path)
        rows = []
        for heuristic in HEURISTICS:
            path = run.path(f'extracted_{heuristic}.csv')
            if not osp.isfile(path):
                continue
            extracted = ExtractedDataset.read_csv(path, heuristic=heuristic)
            rows.append([heuristic, calculate_label_accuracy(extracted.angles, extracted.labels, gt_angles, gt_labels)])
        report['attack'] = OrderedDict(
            view=attack['view'], primary=attack['primary'], accuracy=OrderedDict(rows),
            checkpoints=attack['checkpoints'])
        plots['heuristic_accuracy.csv'] = pd.DataFrame(rows, columns=['heuristic', 'accuracy'])
        plots['accuracy_vs_training.csv'] = pd.DataFrame(
            attack['checkpoints'], columns=['epoch', 'train_acc', 'extraction_acc'])

    refine_path = run.path('refine_report.json')
    if osp.isfile(refine_path) and osp.isfile(run.path('refined.csv')):
        doc = read_json(refine_path)
        report['refine'] = doc
        plots['refinement.csv'] = pd.DataFrame(
            doc['iterations'], columns=['iteration', 'size', 'flagged', 'relabeled', 'pruned'])

    clone_path = run.path('clone_metrics.csv')
    clone = TrainReport.read_csv(clone_path) if osp.isfile(clone_path) else None
    if clone is not None:
        report['clone'] = OrderedDict(
            epochs=len(clone.epochs), final_train_acc=clone.final_train_acc, final_test_acc=clone.final_test_acc)
        if victim is not None and victim.final_test_acc is not None and clone.final_test_acc is not None:
            report['clone']['test_acc_gap'] = victim.final_test_acc - clone.final_test_acc
    if victim is not None:
        frame = victim.to_frame()[['epoch', 'train_acc', 'test_acc']].rename(
            columns={'train_acc': 'victim_train_acc', 'test_acc': 'victim_test_acc'})
        if clone is not None:
            clone_frame = clone.to_frame()[['epoch', 'train_acc', 'test_acc']].rename(
                columns={'train_acc': 'clone_train_acc', 'test_acc': 'clone_test_acc'})
            frame = frame.merge(clone_frame, on='epoch', how='outer')
        plots['victim_vs_clone.csv'] = frame

    defense_path = run.path('defense_report.json')
    if osp.isfile(defense_path):
        doc = read_json(defense_path)
        report['defense'] = doc
        plots['defense.csv'] = pd.DataFrame(
            [[h, v['baseline'], v['defended'], v['relative_drop']] for h, v in doc['adversary_acc'].items()],
            columns=['heuristic', 'baseline', 'defended', 'relative_drop'])

    if not report:
        raise DataError(f'No finished stage found in {run.run_dir}')
    if warn:
        for stage in ('victim', 'attack', 'refine', 'clone', 'defense'):
            if stage not in report:
                logger.warning(f'Stage [{stage}] has no output in {run.run_dir}; skipped in the report.')

    os.makedirs(run.path('plots'), exist_ok=True)
    for name in PLOT_FILES:
        if name not in plots:
            continue
        plots[name].to_csv(run.path('plots', name), index=False, float_format='%.17g')
    write_json(report, run.path('report.json'))
    logger.info(f'Report with {list(report)} and {len(plots)} plot files written to {run.run_dir}')
    return report


# ---------------------------------------------------------------------- #
# entry point
# ---------------------------------------------------------------------- #

COMMANDS = OrderedDict(
    train=cmd_train, attack=cmd_attack, refine=cmd_refine, clone=cmd_clone, defend=cmd_defend, report=cmd_report)


def build_parser():
    parser = argparse.ArgumentParser(prog='qleak', description='Training-data extraction from cloud-hosted QNNs.')
    sub = parser.add_subparsers(dest='command', required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=COMMANDS[name].__doc__.splitlines()[0])
        p.add_argument('--config', '-opt', type=str, default=None, help='Path to option YAML (or JSON) file.')
        p.add_argument('--run-dir', dest='run_dir', type=str, default=None, help='Run directory.')
        p.add_argument('--seed', type=int, default=None, help='Overrides manual_seed.')
        p.add_argument(
            '--force_yml', nargs='+', default=None, help='Force to update yml files. Examples: train:epochs=5')
        if name == 'attack':
            p.add_argument(
                '--heuristic',
                choices=['majority', 'wlinear', 'weighted_linear', 'wexp', 'weighted_exp', 'all'],
                default=None)
            p.add_argument('--view', choices=list(VIEWS), default=None)
        if name == 'defend':
            p.add_argument('--alpha', type=float, default=None, help='Weight of the adversarial loss term.')
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        opt = parse_options(args)
        COMMANDS[args.command](opt)
    except tuple(EXIT_CODES) as e:
        code = next(c for cls, c in EXIT_CODES.items() if isinstance(e, cls))
        get_root_logger().error(f'{e.__class__.__name__}: {e}')
        return code
    return 0


if __name__ == '__main__':
    sys.exit(main())
