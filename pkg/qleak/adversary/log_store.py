import json
from dataclasses import dataclass
from os import path as osp

from ..utils import DataError, get_root_logger


@dataclass(frozen=True)
class LogRecord:
    """One observed forward pass: the encoded input and what was measured."""
    epoch: int
    angles: tuple
    expvals: tuple
    probs: tuple = None

    def to_json(self):
        doc = {'epoch': self.epoch, 'angles': list(self.angles), 'expvals': list(self.expvals)}
        if self.probs is not None:
            doc['probs'] = list(self.probs)
        return json.dumps(doc)


class EpochLogStore():
    """Append-only log of everything the cloud sees during training.

    When `path` is given every record is also streamed to that file as one
    JSON line. Epochs must be observed in non-decreasing order.

    Args:
        path (str | None): JSON-lines file to write. Default: None.
    """

    def __init__(self, path=None):
        self.records = []
        self.path = path
        self._fh = open(path, 'w', encoding='utf-8') if path is not None else None

    def observe(self, epoch, record):
        epoch = int(epoch)
        if self.records and epoch < self.records[-1].epoch:
            raise ValueError(f'Epoch {epoch} observed after epoch {self.records[-1].epoch}')
        if isinstance(record, LogRecord):
            entry = LogRecord(epoch, tuple(record.angles), tuple(record.expvals), record.probs)
        else:
            # a ForwardRecord of the victim
            entry = LogRecord(epoch, tuple(record.angles), tuple(record.expvals), tuple(record.user_probs))
        if self.records and len(entry.expvals) != len(self.records[0].expvals):
            raise ValueError(f'Record has {len(entry.expvals)} expectations, the log has '
                             f'{len(self.records[0].expvals)} per record')
        self.records.append(entry)
        if self._fh is not None:
            self._fh.write(entry.to_json() + '\n')

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()
        return False

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def n_qubits(self):
        return len(self.records[0].expvals) if self.records else 0

    def epochs(self):
        return sorted({r.epoch for r in self.records})

    @property
    def last_epoch(self):
        return self.records[-1].epoch if self.records else 0

    def truncate(self, max_epoch):
        """A new in-memory store holding the records of epochs 1..max_epoch."""
        store = EpochLogStore()
        store.records = [r for r in self.records if r.epoch <= max_epoch]
        return store

    def epoch_slice(self, epoch):
        """A new in-memory store holding only the records of one epoch."""
        store = EpochLogStore()
        store.records = [r for r in self.records if r.epoch == epoch]
        return store

    def dump(self, path):
        with open(path, 'w', encoding='utf-8') as f:
            for r in self.records:
                f.write(r.to_json() + '\n')

    @classmethod
    def load(cls, path):
        """Read a JSON-lines log; any bad line is reported with its number."""
        if not osp.isfile(path):
            raise DataError(f'Epoch log not found: {path}')
        store = cls()
        with open(path, 'r', encoding='utf-8') as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    doc = json.loads(line)
                    record = LogRecord(
                        int(doc['epoch']), tuple(float(a) for a in doc['angles']),
                        tuple(float(e) for e in doc['expvals']),
                        tuple(float(p) for p in doc['probs']) if doc.get('probs') is not None else None)
                    store.observe(record.epoch, record)
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                    raise DataError(f'Corrupt epoch log {path}, line {lineno}: {e}') from e
        get_root_logger().info(f'Loaded {len(store)} records over {len(store.epochs())} epochs from {path}')
        return store


def observe(log_store, epoch_index, record):
    log_store.observe(epoch_index, record)
