import datetime
import pandas as pd
from collections import OrderedDict
from dataclasses import dataclass, field

from .data import AngleDataset, build_dataloader
from .defense.masking import assign_adversarial_targets
from .utils import AvgTimer, DataError, MessageLogger, get_root_logger

METRIC_COLUMNS = ['epoch', 'loss', 'l_correct', 'l_adv', 'train_acc', 'test_acc']


@dataclass
class EpochStats:
    epoch: int
    loss: float
    train_acc: float
    test_acc: float = None
    l_correct: float = None
    l_adv: float = None


@dataclass
class TrainReport:
    """Per-epoch loss and accuracies of one training run."""
    epochs: list = field(default_factory=list)
    n_records: int = 0

    @property
    def final_train_acc(self):
        return self.epochs[-1].train_acc if self.epochs else None

    @property
    def final_test_acc(self):
        return self.epochs[-1].test_acc if self.epochs else None

    def train_acc_curve(self):
        return [e.train_acc for e in self.epochs]

    def to_frame(self):
        rows = [[getattr(e, c) for c in METRIC_COLUMNS] for e in self.epochs]
        return pd.DataFrame(rows, columns=METRIC_COLUMNS)

    def write_csv(self, path):
        self.to_frame().to_csv(path, index=False, float_format='%.17g')
        return path

    @classmethod
    def read_csv(cls, path):
        frame = pd.read_csv(path, float_precision='round_trip')
        frame = frame.astype(object).where(frame.notna(), None)
        epochs = [EpochStats(**{c: row[c] for c in METRIC_COLUMNS}) for _, row in frame.iterrows()]
        for e in epochs:
            e.epoch = int(e.epoch)
        return cls(epochs=epochs)


def train_qnn(model, table, observer=None, opt=None, tag='victim', tb_logger=None):
    """Mini-batch training with the cloud watching.

    After every epoch the whole train split is evaluated once, in row order,
    and each pass goes to `observer` (the cloud's epoch log). Test accuracy is
    measured as well but never observed.

    Args:
        model (QNNModel): Model to train in place.
        table (TabularDataset): Scaled dataset with its split.
        observer (EpochLogStore | None): Receives one record per train row
            and epoch. Default: None.
        opt (dict | None): Options for the message logger. Default: None.
        tag (str): Name of the run in logs. Default: 'victim'.
        tb_logger (SummaryWriter | None): TensorBoard writer. Default: None.

    Returns:
        TrainReport
    """
    config = model.config
    logger = get_root_logger()
    if len(table.train_idx) == 0:
        raise DataError(f'Cannot train on {table.name}: the train split is empty')

    adv_targets = None
    if config.defended:
        adv_targets = assign_adversarial_targets(table.train_labels(), config.adversarial_target_scheme,
                                                 config.n_classes, config.n_mask_classes)
    train_set = AngleDataset(table, 'train', adv_targets)
    test_set = AngleDataset(table, 'test')
    train_loader = build_dataloader(train_set, config.batch_size, config.seed)

    if opt is None:
        opt = OrderedDict(name=table.name, train=OrderedDict(epochs=config.epochs), logger=OrderedDict())
    msg_logger = MessageLogger(opt, tag=tag, tb_logger=tb_logger)
    logger.info(f'Training statistics [{tag}]:'
                f'\n\tNumber of train samples: {len(train_set)}'
                f'\n\tNumber of test samples: {len(test_set)}'
                f'\n\tBatch size: {config.batch_size}'
                f'\n\tTotal epochs: {config.epochs}; quantum params: {config.n_params}'
                f'\n\tBackend: {model.backend}')

    report = TrainReport()
    epoch_timer = AvgTimer()
    for epoch in range(1, config.epochs + 1):
        epoch_timer.start()
        loss_sums = OrderedDict()
        for batch in train_loader:
            model.optimize_parameters(batch)
            n = batch['labels'].shape[0]
            for k, v in model.get_current_log().items():
                loss_sums[k] = loss_sums.get(k, 0.0) + v * n

        # the pass the cloud records
        out = model.forward_batch(train_set.angles)
        if observer is not None:
            for record in model.records_from(out):
                observer.observe(epoch, record)
            report.n_records += len(train_set)
        train_acc = float((out['predicted'] == train_set.labels).double().mean())
        test_acc = model.accuracy(test_set.angles, test_set.labels)
        epoch_timer.record()

        means = {k: v / len(train_set) for k, v in loss_sums.items()}
        report.epochs.append(
            EpochStats(
                epoch=epoch,
                loss=means['l_total'],
                train_acc=train_acc,
                test_acc=test_acc,
                l_correct=means.get('l_correct'),
                l_adv=means.get('l_adv')))

        log_vars = {'epoch': epoch, 'lrs': model.get_current_learning_rate(), 'time': epoch_timer.get_current_time()}
        log_vars.update(means)
        log_vars['acc_train'] = train_acc
        log_vars['acc_test'] = test_acc
        msg_logger(log_vars)

    consumed_time = str(datetime.timedelta(seconds=int(epoch_timer.get_elapsed())))
    logger.info(f'End of training [{tag}]. Time consumed: {consumed_time}, '
                f'{epoch_timer.get_avg_time():.3f}s per epoch')
    return report

