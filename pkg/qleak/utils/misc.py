import json
import numpy as np
import os
import random
import time
import torch
from os import path as osp

from .errors import ConfigError, DataError


def set_random_seed(seed):
    """Set random seeds."""
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


def get_time_str():
    return time.strftime('%Y%m%d_%H%M%S', time.localtime())


def scandir(dir_path, suffix=None, recursive=False, full_path=False):
    """Scan a directory to find the interested files.

    Args:
        dir_path (str): Path of the directory.
        suffix (str | tuple(str), optional): File suffix that we are
            interested in. Default: None.
        recursive (bool, optional): If set to True, recursively scan the
            directory. Default: False.
        full_path (bool, optional): If set to True, include the dir_path.
            Default: False.

    Returns:
        A generator for all the interested files with relative paths.
    """

    if (suffix is not None) and not isinstance(suffix, (str, tuple)):
        raise TypeError('"suffix" must be a string or tuple of strings')

    root = dir_path

    def _scandir(dir_path, suffix, recursive):
        for entry in sorted(os.scandir(dir_path), key=lambda e: e.name):
            if not entry.name.startswith('.') and entry.is_file():
                if full_path:
                    return_path = entry.path
                else:
                    return_path = osp.relpath(entry.path, root)

                if suffix is None:
                    yield return_path
                elif return_path.endswith(suffix):
                    yield return_path
            else:
                if recursive:
                    yield from _scandir(entry.path, suffix=suffix, recursive=recursive)
                else:
                    continue

    return _scandir(dir_path, suffix=suffix, recursive=recursive)


def write_json(obj, path):
    """Write a report as JSON with sorted keys, so equal content gives equal bytes."""
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write('\n')


def read_json(path):
    if not osp.isfile(path):
        raise DataError(f'Missing report file: {path}')
    with open(path, 'r', encoding='utf-8') as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise DataError(f'Corrupt JSON in {path} at line {e.lineno}: {e.msg}') from e


class RunLock():
    """Single-writer lock on a run directory.

    Usage::

        with RunLock(run_dir):
            ...
    """

    def __init__(self, run_dir):
        self.run_dir = run_dir
        self.lock_path = osp.join(run_dir, '.lock')
        self.fd = None

    def __enter__(self):
        os.makedirs(self.run_dir, exist_ok=True)
        try:
            self.fd = os.open(self.lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError as e:
            raise ConfigError(f'Run directory is locked by another writer: {self.lock_path}. '
                              'Remove the file if no other run is active.') from e
        os.write(self.fd, str(os.getpid()).encode())
        return self

    def __exit__(self, exc_type, exc, tb):
        os.close(self.fd)
        os.remove(self.lock_path)
        return False
